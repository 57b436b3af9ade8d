#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "pooleval/run.hpp"

namespace pooleval {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

struct PlotGeometry {
    double width = 640, height = 480;
    double left = 64, right = 24, top = 40, bottom = 48;

    double x(double recall) const { return left + recall * (width - left - right); }
    double y(double precision) const {
        return height - bottom - precision * (height - top - bottom);
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

void write_pr_svg(const std::vector<PRCurve>& curves, const std::string& title,
                  const std::filesystem::path& path) {
    PlotGeometry g;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write plot: " + path.string());

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << g.width << " "
        << g.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"" << g.width << "\" height=\"" << g.height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << g.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";

    // axes + grid
    for (int t = 0; t <= 5; ++t) {
        const double v = t / 5.0;
        out << "<line x1=\"" << g.x(v) << "\" y1=\"" << g.y(0) << "\" x2=\"" << g.x(v)
            << "\" y2=\"" << g.y(1) << "\" stroke=\"#e0e0e0\"/>\n";
        out << "<line x1=\"" << g.x(0) << "\" y1=\"" << g.y(v) << "\" x2=\"" << g.x(1)
            << "\" y2=\"" << g.y(v) << "\" stroke=\"#e0e0e0\"/>\n";
        out << "<text x=\"" << g.x(v) << "\" y=\"" << g.y(0) + 18
            << "\" text-anchor=\"middle\">" << fmt(v) << "</text>\n";
        out << "<text x=\"" << g.x(0) - 8 << "\" y=\"" << g.y(v) + 4
            << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    }
    out << "<line x1=\"" << g.x(0) << "\" y1=\"" << g.y(0) << "\" x2=\"" << g.x(1) << "\" y2=\""
        << g.y(0) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << g.x(0) << "\" y1=\"" << g.y(0) << "\" x2=\"" << g.x(0) << "\" y2=\""
        << g.y(1) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (g.x(0) + g.x(1)) / 2 << "\" y=\"" << g.height - 10
        << "\" text-anchor=\"middle\">recall</text>\n";
    out << "<text x=\"16\" y=\"" << (g.y(0) + g.y(1)) / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (g.y(0) + g.y(1)) / 2
        << ")\">precision</text>\n";

    for (size_t c = 0; c < curves.size(); ++c) {
        const char* color = kPalette[c % kPaletteSize];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const PRPoint& p : curves[c].points) {
            out << g.x(p.recall) << "," << g.y(p.precision) << " ";
        }
        out << "\"/>\n";
        for (const PRPoint& p : curves[c].points) {
            out << "<circle cx=\"" << g.x(p.recall) << "\" cy=\"" << g.y(p.precision)
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        const double ly = g.top + 16 + 16 * static_cast<double>(c);
        out << "<line x1=\"" << g.width - 190 << "\" y1=\"" << ly - 4 << "\" x2=\""
            << g.width - 170 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << g.width - 164 << "\" y=\"" << ly << "\">" << curves[c].retriever_id
            << " (auc " << fmt(curves[c].pr_auc) << ")</text>\n";
    }
    out << "</svg>\n";
}

namespace {

std::vector<PRCurve> curves_from_report(const nlohmann::json& report) {
    std::vector<PRCurve> curves;
    for (const auto& c : report.at("curves")) {
        PRCurve curve;
        curve.retriever_id = c.at("retriever_id").get<std::string>();
        curve.pr_auc = c.at("pr_auc").get<double>();
        for (const auto& p : c.at("points")) {
            curve.points.push_back({p.at("cutoff_k").get<int>(), p.at("precision").get<double>(),
                                    p.at("recall").get<double>()});
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

// Strategy-dimension fingerprints for slicing. Two retrievers pair under a
// slice when they differ in that dimension and agree on all others.
std::map<std::string, std::string> dimensions_of(const nlohmann::json& retriever) {
    return {
        {"segmentation", retriever.at("segmentation").dump()},
        {"mode", retriever.at("mode").dump()},
        {"embedder", retriever.at("embedder_id").dump()},
        {"rewriter", retriever.at("rewriter").dump()},
        {"filter", retriever.at("filter").dump()},
        {"reranker", retriever.at("reranker").dump()},
        {"k", retriever.at("k").dump()},
    };
}

}  // namespace

int cmd_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir,
               const std::string& slice, std::ostream& log) {
    const auto report_path = run_dir / "report.json";
    if (!std::filesystem::exists(report_path)) {
        throw UsageError("no report.json under " + run_dir.string());
    }
    nlohmann::json report;
    {
        std::ifstream in(report_path);
        try {
            in >> report;
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("unreadable report.json: " + std::string(e.what()));
        }
    }
    if (!report.contains("curves") || report["curves"].empty()) {
        throw UsageError("run has no curves (partial or aborted run): " + run_dir.string());
    }

    const std::vector<PRCurve> curves = curves_from_report(report);
    std::filesystem::create_directories(out_dir);

    for (const PRCurve& c : curves) {
        write_curve_csv(c, out_dir / (c.retriever_id + ".csv"));
    }

    if (slice.empty()) {
        write_pr_svg(curves, "precision-recall comparison", out_dir / "comparison.svg");
        log << "wrote comparison.svg and " << curves.size() << " curve tables -> "
            << out_dir.string() << "\n";
        return 0;
    }

    static const std::set<std::string> kDims{"segmentation", "mode",     "embedder", "rewriter",
                                             "filter",       "reranker", "k"};
    if (!kDims.count(slice)) {
        throw UsageError("unknown slice dimension: " + slice);
    }
    const auto& retrievers = report.at("config").at("retrievers");
    std::map<std::string, std::map<std::string, std::string>> dims;
    std::map<std::string, const PRCurve*> by_id;
    for (const PRCurve& c : curves) by_id[c.retriever_id] = &c;
    for (const auto& r : retrievers) {
        dims[r.at("id").get<std::string>()] = dimensions_of(r);
    }

    size_t plots = 0;
    std::vector<std::string> ids;
    for (const auto& [id, d] : dims) ids.push_back(id);
    for (size_t a = 0; a < ids.size(); ++a) {
        for (size_t b = a + 1; b < ids.size(); ++b) {
            const auto& da = dims[ids[a]];
            const auto& db = dims[ids[b]];
            if (da.at(slice) == db.at(slice)) continue;
            bool others_equal = true;
            for (const auto& [dim, value] : da) {
                if (dim != slice && value != db.at(dim)) {
                    others_equal = false;
                    break;
                }
            }
            if (!others_equal) continue;
            if (!by_id.count(ids[a]) || !by_id.count(ids[b])) continue;
            const std::string name = "slice_" + slice + "__" + ids[a] + "__vs__" + ids[b] + ".svg";
            write_pr_svg({*by_id[ids[a]], *by_id[ids[b]]}, slice + ": " + ids[a] + " vs " + ids[b],
                         out_dir / name);
            ++plots;
        }
    }
    log << "wrote " << plots << " slice plot(s) for dimension '" << slice << "' -> "
        << out_dir.string() << "\n";
    return 0;
}

}  // namespace pooleval

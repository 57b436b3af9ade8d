#include "pooleval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace pooleval {

ConfusionResult confusion_at_k(const RankedList& list, const PseudoGT& gt, int k,
                               const ChunkStore& chunks) {
    if (k < 1) throw std::invalid_argument("confusion_at_k requires k >= 1");
    const size_t prefix = std::min(list.entries.size(), static_cast<size_t>(k));

    ConfusionResult r;
    std::set<std::string> covered;
    for (size_t i = 0; i < prefix; ++i) {
        const Chunk& chunk = chunks.at(list.entries[i].chunk_id);
        bool is_tp = false;
        for (const MinimalFact& fact : gt.facts) {
            if (covers(chunk, fact)) {
                is_tp = true;
                covered.insert(fact.fact_id);
            }
        }
        if (is_tp) {
            ++r.counts.tp;
        } else {
            ++r.counts.fp;
        }
    }
    r.counts.fn = static_cast<long>(gt.facts.size()) - static_cast<long>(covered.size());
    r.precision = prefix == 0 ? 0.0
                              : static_cast<double>(r.counts.tp) / static_cast<double>(prefix);
    r.recall = gt.facts.empty()
                   ? 0.0
                   : static_cast<double>(covered.size()) / static_cast<double>(gt.facts.size());
    return r;
}

double f_beta(double precision, double recall, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("f_beta requires beta > 0");
    const double b2 = beta * beta;
    const double denom = b2 * precision + recall;
    if (denom == 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / denom;
}

PRCurve pr_curve(const std::string& retriever_id, const std::vector<QueryEval>& queries,
                 int k_max, const ChunkStore& chunks) {
    if (k_max < 1) throw std::invalid_argument("pr_curve requires k_max >= 1");
    for (const QueryEval& q : queries) {
        if (!q.list || !q.gt) throw std::invalid_argument("pr_curve: query without list or gt");
    }

    PRCurve curve;
    curve.retriever_id = retriever_id;
    curve.points.reserve(static_cast<size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) {
        double precision_sum = 0.0, recall_sum = 0.0;
        size_t recall_eligible = 0;
        for (const QueryEval& q : queries) {
            const ConfusionResult r = confusion_at_k(*q.list, *q.gt, k, chunks);
            precision_sum += r.precision;
            if (!q.gt->facts.empty()) {
                recall_sum += r.recall;
                ++recall_eligible;
            }
        }
        PRPoint point;
        point.cutoff_k = k;
        point.precision = queries.empty() ? 0.0 : precision_sum / static_cast<double>(queries.size());
        point.recall = recall_eligible == 0 ? 0.0 : recall_sum / static_cast<double>(recall_eligible);
        curve.points.push_back(point);
    }
    curve.pr_auc = pr_auc(curve.points);
    return curve;
}

namespace {

// Sorted by recall ascending, one point per distinct recall keeping the
// maximum precision.
std::vector<PRPoint> collapse_by_recall(std::vector<PRPoint> points) {
    std::sort(points.begin(), points.end(), [](const PRPoint& a, const PRPoint& b) {
        if (a.recall != b.recall) return a.recall < b.recall;
        return a.precision > b.precision;
    });
    std::vector<PRPoint> out;
    for (const PRPoint& p : points) {
        if (!out.empty() && out.back().recall == p.recall) continue;
        out.push_back(p);
    }
    return out;
}

}  // namespace

double pr_auc(const std::vector<PRPoint>& points) {
    if (points.empty()) throw std::invalid_argument("pr_auc requires at least one point");
    const std::vector<PRPoint> collapsed = collapse_by_recall(points);
    double area = 0.0;
    double prev_recall = 0.0;
    for (const PRPoint& p : collapsed) {
        area += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    return area;
}

double precision_at_recall(const std::vector<PRPoint>& points, double recall) {
    const std::vector<PRPoint> collapsed = collapse_by_recall(points);
    for (const PRPoint& p : collapsed) {
        if (p.recall >= recall) return p.precision;
    }
    return collapsed.back().precision;
}

ComparisonReport compare(const std::vector<PRCurve>& curves) {
    if (curves.size() < 2) throw std::invalid_argument("compare requires >= 2 curves");

    ComparisonReport report;
    report.curves = curves;

    std::vector<size_t> order(curves.size());
    for (size_t i = 0; i < curves.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (curves[a].pr_auc != curves[b].pr_auc) return curves[a].pr_auc > curves[b].pr_auc;
        return curves[a].retriever_id < curves[b].retriever_id;
    });
    for (size_t i : order) report.ranking.push_back(curves[i].retriever_id);
    report.winners.push_back(curves[order[0]].retriever_id);
    for (size_t i = 1; i < order.size(); ++i) {
        if (curves[order[i]].pr_auc == curves[order[0]].pr_auc) {
            report.winners.push_back(curves[order[i]].retriever_id);
        } else {
            break;
        }
    }

    auto max_recall = [](const PRCurve& c) {
        double m = 0.0;
        for (const PRPoint& p : c.points) m = std::max(m, p.recall);
        return m;
    };

    constexpr int kGridPoints = 100;
    report.dominance.assign(curves.size(), std::vector<double>(curves.size(), 0.0));
    for (size_t a = 0; a < curves.size(); ++a) {
        for (size_t b = 0; b < curves.size(); ++b) {
            const double shared = std::min(max_recall(curves[a]), max_recall(curves[b]));
            int wins = 0;
            for (int g = 0; g < kGridPoints; ++g) {
                const double r = shared * static_cast<double>(g) / (kGridPoints - 1);
                const double pa = precision_at_recall(curves[a].points, r);
                const double pb = precision_at_recall(curves[b].points, r);
                if (pa >= pb) ++wins;
            }
            report.dominance[a][b] = static_cast<double>(wins) / kGridPoints;
        }
    }
    return report;
}

void write_curve_csv(const PRCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write curve file: " + path.string());
    out << "cutoff_k,precision,recall\n";
    char buf[96];
    for (const PRPoint& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g\n", p.cutoff_k, p.precision, p.recall);
        out << buf;
    }
}

}  // namespace pooleval

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pooleval/pseudogt.hpp"
#include "pooleval/run.hpp"
#include "pooleval/synthetic.hpp"
#include "pooleval/text.hpp"

namespace py = pybind11;
using namespace pooleval;

namespace {

SegmentationSpec make_seg(const std::string& strategy, size_t min_merge_len, size_t max_chunk_len) {
    SegmentationSpec seg;
    seg.strategy = seg_strategy_from_string(strategy);
    seg.min_merge_len = min_merge_len;
    seg.max_chunk_len = max_chunk_len;
    return seg;
}

std::vector<Chunk> segment_py(const std::string& doc_id, const std::string& body,
                              const std::string& strategy, size_t min_merge_len,
                              size_t max_chunk_len) {
    Document doc;
    doc.id = doc_id;
    doc.body = body;
    doc.metadata.length_chars = utf8::length(body);
    return segment_document(doc, make_seg(strategy, min_merge_len, max_chunk_len));
}

std::vector<std::tuple<std::string, double, int>> entries_py(const RankedList& list) {
    std::vector<std::tuple<std::string, double, int>> out;
    for (const RankedEntry& e : list.entries) out.emplace_back(e.chunk_id, e.score, e.rank);
    return out;
}

std::vector<std::tuple<std::string, double, int>> bm25_search_py(
    const std::vector<std::pair<std::string, std::string>>& chunks, const std::string& query,
    int k) {
    std::vector<Chunk> cs;
    for (const auto& [id, text] : chunks) {
        Chunk c;
        c.id = id;
        c.text = text;
        cs.push_back(std::move(c));
    }
    SparseIndex index(cs);
    return entries_py(index.search(query, k, "q"));
}

std::vector<std::tuple<std::string, double, int>> dense_search_py(
    const std::vector<std::pair<std::string, std::string>>& chunks, const std::string& query,
    int k, const std::string& embedder_id, size_t dim) {
    HashedBowEmbedder embedder(embedder_id, dim);
    std::vector<std::string> ids;
    std::vector<EmbeddingVector> vectors;
    for (const auto& [id, text] : chunks) {
        ids.push_back(id);
        vectors.push_back(embedder.embed(text));
    }
    DenseIndex index(std::move(ids), std::move(vectors));
    return entries_py(index.search(embedder.embed(query), k, "q"));
}

double pr_auc_py(const std::vector<std::tuple<int, double, double>>& points) {
    std::vector<PRPoint> ps;
    for (const auto& [k, p, r] : points) ps.push_back({k, p, r});
    return pr_auc(ps);
}

py::dict verify_py(uint64_t seed, int n_docs, int n_queries, int k, size_t workers) {
    SyntheticSpec synth = default_verify_synth();
    synth.seed = seed;
    if (n_docs > 0) synth.n_docs = n_docs;
    if (n_queries > 0) synth.n_queries = n_queries;
    VerifyOptions opts;
    opts.workers = workers;
    const VerificationReport report =
        verify_appendix_a(default_verify_retrievers(), synth, k, opts);
    py::dict out;
    out["passed"] = report.passed;
    out["max_precision_delta"] = report.max_precision_delta;
    out["chunk_recall_sign_agreement_rate"] = report.chunk_recall_sign_agreement_rate;
    out["fact_recall_sign_agreement_rate"] = report.fact_recall_sign_agreement_rate;
    out["pseudo_ge_true_rate"] = report.pseudo_ge_true_rate;
    out["judge_calls"] = report.judge_calls;
    out["pool_total"] = report.pool_total;
    out["n_chunks"] = report.n_chunks;
    out["failures"] = report.failures;
    return out;
}

int evaluate_py(const std::filesystem::path& config_path) {
    RunConfig config = RunConfig::load(config_path);
    std::ostringstream log;
    const RunOutcome outcome = cmd_evaluate(config, log);
    py::print(log.str());
    return outcome.exit_code;
}

}  // namespace

PYBIND11_MODULE(_pooleval, m) {
    m.doc() = "retriever evaluation via pooled relevance judgments";

    py::class_<Span>(m, "Span")
        .def_readonly("start", &Span::start)
        .def_readonly("end", &Span::end);

    py::class_<Chunk>(m, "Chunk")
        .def_readonly("id", &Chunk::id)
        .def_readonly("doc_id", &Chunk::doc_id)
        .def_readonly("span", &Chunk::span)
        .def_readonly("text", &Chunk::text)
        .def_readonly("heading_level", &Chunk::heading_level)
        .def_readonly("strategy_id", &Chunk::strategy_id)
        .def("__repr__", [](const Chunk& c) { return "<Chunk " + c.id + ">"; });

    m.def("segment_document", &segment_py, py::arg("doc_id"), py::arg("body"),
          py::arg("strategy") = "original", py::arg("min_merge_len") = 100,
          py::arg("max_chunk_len") = 500,
          "Split a markdown body into chunks under one segmentation strategy.");

    py::class_<HashedBowEmbedder>(m, "HashedBowEmbedder")
        .def(py::init<std::string, size_t>(), py::arg("id"), py::arg("dim") = 64)
        .def("embed",
             [](HashedBowEmbedder& e, const std::string& text) { return e.embed(text).values; })
        .def_property_readonly("dim", &HashedBowEmbedder::dim);

    m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine(EmbeddingVector{a}, EmbeddingVector{b});
    });

    m.def("bm25_search", &bm25_search_py, py::arg("chunks"), py::arg("query"), py::arg("k"),
          "BM25 top-k over (id, text) pairs; returns (chunk_id, score, rank) tuples.");
    m.def("dense_search", &dense_search_py, py::arg("chunks"), py::arg("query"), py::arg("k"),
          py::arg("embedder_id") = "hash-64", py::arg("dim") = 64,
          "Exact cosine top-k over hashed bag-of-words embeddings.");

    m.def(
        "rrf_fuse",
        [](const std::vector<std::tuple<std::string, double, int>>& dense,
           const std::vector<std::tuple<std::string, double, int>>& sparse, int k) {
            RankedList d, s;
            d.query_id = s.query_id = "q";
            for (const auto& [id, score, rank] : dense) d.entries.push_back({id, score, rank});
            for (const auto& [id, score, rank] : sparse) s.entries.push_back({id, score, rank});
            return entries_py(hybrid_fuse(d, s, k));
        },
        py::arg("dense"), py::arg("sparse"), py::arg("k"),
        "Reciprocal-rank fusion (constant 60) of two ranked lists.");

    m.def("f_beta", &f_beta, py::arg("precision"), py::arg("recall"), py::arg("beta"));
    m.def("pr_auc", &pr_auc_py, py::arg("points"),
          "Step-sum PR area; points are (cutoff_k, precision, recall) tuples.");

    m.def("normalize_text", [](const std::string& s) { return text::normalize(s); });
    m.def(
        "covers_text",
        [](const std::string& chunk_text, const std::string& canonical_fact) {
            return text::normalize(chunk_text).find(text::normalize(canonical_fact)) !=
                   std::string::npos;
        },
        py::arg("chunk_text"), py::arg("canonical_fact"));

    m.def("verify", &verify_py, py::arg("seed") = 7, py::arg("n_docs") = 0,
          py::arg("n_queries") = 0, py::arg("k") = 20, py::arg("workers") = 1,
          "Run the subset-sampling verification on a seeded synthetic corpus.");

    m.def("evaluate", &evaluate_py, py::arg("config_path"),
          "Run a full evaluation from a JSON config; returns the exit code.");

    m.attr("__version__") = "0.1.0";
}

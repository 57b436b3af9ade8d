#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pooleval/pseudogt.hpp"

namespace pooleval {

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;  // uncovered facts for pseudo-GT evals; chunk-level FN for full-GT evals
    std::optional<long> tn;
};

struct PRPoint {
    int cutoff_k = 0;
    double precision = 0.0;
    double recall = 0.0;
};

struct PRCurve {
    std::string retriever_id;
    std::vector<PRPoint> points;  // ordered by cutoff_k
    double pr_auc = 0.0;
};

struct ConfusionResult {
    ConfusionCounts counts;
    double precision = 0.0;
    double recall = 0.0;
};

// Counting rule over the top-k prefix: a recalled chunk is a chunk-level TP
// iff it covers at least one pseudo-GT fact, else FP; precision is
// chunk-level (0 on an empty prefix); recall is fact-level, the fraction of
// gt facts covered by the prefix (0 when the gt has no facts -- callers skip
// such queries in macro recall).
ConfusionResult confusion_at_k(const RankedList& list, const PseudoGT& gt, int k,
                               const ChunkStore& chunks);

// (1+b^2)*p*r / (b^2*p + r); 0 when the denominator is 0. beta <= 0 throws.
double f_beta(double precision, double recall, double beta);

struct QueryEval {
    const RankedList* list = nullptr;
    const PseudoGT* gt = nullptr;
};

// Sweeps k = 1..k_max; precision is macro-averaged over all queries, recall
// over recall-eligible queries (those with at least one gt fact).
PRCurve pr_curve(const std::string& retriever_id, const std::vector<QueryEval>& queries,
                 int k_max, const ChunkStore& chunks);

// Step-sum (average-precision style) area: points sorted by recall ascending,
// duplicate recalls collapsed keeping max precision, sum of (R_i - R_{i-1}) *
// P_i with R_0 = 0. No linear interpolation.
double pr_auc(const std::vector<PRPoint>& points);

struct CostReport {
    size_t queries = 0;
    size_t judge_calls = 0;       // inner adapter invocations (cache misses)
    size_t cache_hits = 0;
    size_t pooled_union_total = 0;  // sum over queries of |pool|
    size_t sum_topk_total = 0;      // sum over queries of sum_i K_i
    std::vector<size_t> pool_sizes;
    double wall_time_ms = 0.0;      // volatile; excluded from report digests
};

struct ComparisonReport {
    std::vector<PRCurve> curves;
    std::vector<std::string> ranking;        // retriever ids by pr_auc descending
    std::vector<std::string> winners;        // top pr_auc; >1 entry reports a tie
    std::vector<std::vector<double>> dominance;  // dominance[a][b] in curve order
    CostReport cost;
};

// Dominance(A,B): the fraction of a 100-point recall grid, linear on
// [0, min(max recall of A, max recall of B)] endpoints included, where A's
// step-function precision is >= B's.
ComparisonReport compare(const std::vector<PRCurve>& curves);

// Step-function precision lookup used by both pr_auc and compare: precision
// of the first collapsed point with recall >= r (last point's precision
// beyond the curve).
double precision_at_recall(const std::vector<PRPoint>& points, double recall);

void write_curve_csv(const PRCurve& curve, const std::filesystem::path& path);

}  // namespace pooleval

#include "acceptance/criteria.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace dragun::acceptance;

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    fs::path cli;
    fs::path work = fs::temp_directory_path() / fmt::format("dragun-acceptance-{}", ::getpid());
    bool keep = false;
    std::vector<std::size_t> known;
    app.add_option("--cli", cli, "Path to the dragun binary")->required()->check(CLI::ExistingFile);
    app.add_option("--work-dir", work, "Scratch directory for pipeline runs");
    app.add_flag("--keep", keep, "Keep the scratch directory");
    app.add_option("--known-failure", known, "Criterion expected to fail; the run fails if it passes");
    CLI11_PARSE(app, argc, argv);

    fs::remove_all(work);
    fs::create_directories(work);
    fs::path golden;

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"BM25 oracle equivalence", bm25_oracle_equivalence},
        {"analyzer conformance", analyzer_conformance},
        {"k-means correctness", kmeans_correctness},
        {"filter contracts", filter_contracts},
        {"scoring fixture", scoring_fixture},
        {"metrics and deltas", [&] { return metrics_and_deltas(golden); }},
        {"end-to-end determinism", [&] { return end_to_end_determinism(cli, work, golden); }},
        {"citation integrity", [&] { return citation_integrity(cli, golden); }},
        {"fallback behavior", fault_injection},
    };
    // The metrics check reads the golden run, so the pipeline runs first.
    const std::vector<std::size_t> order{0, 1, 2, 3, 4, 6, 5, 7, 8};
    std::vector<Outcome> outcomes(criteria.size());
    for (auto i : order) {
        try {
            outcomes[i] = criteria[i].second();
        } catch (const std::exception& e) {
            outcomes[i] = {false, fmt::format("threw: {}", e.what())};
        }
    }

    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        fmt::print("{} criterion {}: {} ({})\n", outcomes[i].pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                   outcomes[i].detail);
        const bool expected_fail = std::find(known.begin(), known.end(), i + 1) != known.end();
        if (outcomes[i].pass == expected_fail) ++unexpected;
    }
    int failed = 0;
    for (const auto& o : outcomes) failed += o.pass ? 0 : 1;
    fmt::print("{} of {} criteria pass", criteria.size() - failed, criteria.size());
    if (!known.empty()) fmt::print("; known failures: {}", fmt::join(known, ", "));
    fmt::print("\n");
    if (!keep) fs::remove_all(work);
    return unexpected == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}

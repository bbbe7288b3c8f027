#pragma once

#include <filesystem>
#include <string>

namespace dragun::acceptance {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome bm25_oracle_equivalence();
Outcome analyzer_conformance();
Outcome kmeans_correctness();
Outcome filter_contracts();
Outcome scoring_fixture();
Outcome metrics_and_deltas(const std::filesystem::path& golden_run);
Outcome end_to_end_determinism(const std::filesystem::path& cli, const std::filesystem::path& work,
                               std::filesystem::path& golden_run);
Outcome citation_integrity(const std::filesystem::path& cli, const std::filesystem::path& golden_run);
Outcome fault_injection();

}  // namespace dragun::acceptance

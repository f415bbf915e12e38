#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace csl {

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Full acceptance battery.  Every criterion runs even after a failure, so a
// report always covers all of them.  Scenario outputs land in subdirectories
// of scratch_dir.
std::vector<CriterionResult> run_verification(const std::string& scratch_dir,
                                              std::uint64_t seed = 20250815);

// "PASS <name>: <detail>" or "FAIL <name>: <detail>"
std::string format_criterion_line(const CriterionResult& result);

// Writes {schema_version, all_pass, criteria: [{name, pass, detail}]};
// returns true when every criterion passed.
bool write_verification_report(const std::string& path,
                               const std::vector<CriterionResult>& results);

} // namespace csl

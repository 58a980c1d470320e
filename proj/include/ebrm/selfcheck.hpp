#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ebrm::selfcheck {

struct CheckResult {
    std::string name;
    double tolerance = 0.0;
    double observed = 0.0;
    bool pass = false;
};

/// Run every module's invariant suite: closed-form identities, fixed
/// point, contraction, relaxed triangle, Monte-Carlo consistency, oracle
/// equivalences, determinism. Cheap enough for a shipped binary.
std::vector<CheckResult> run_all();

/// Tabulated report; returns true when every check passed.
bool report(const std::vector<CheckResult>& results, std::ostream& os);

} // namespace ebrm::selfcheck

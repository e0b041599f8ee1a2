#pragma once

#include <string>
#include <vector>

namespace corrlab {

// One exact or definitional identity, evaluated at a small size.
struct IdentityCheck {
    std::string module;
    std::string name;
    double measured = 0.0;   // the discrepancy that was compared against tolerance
    double tolerance = 0.0;
    bool passed = false;
};

// Every definitional identity of the library, grouped by module. Runs in a
// few seconds on one core.
std::vector<IdentityCheck> run_identity_suite();

} // namespace corrlab

#pragma once

#include <string>

namespace corrlab {

// Report-only experiments: measured left side over the stated right-side shape.
struct RatioReport {
    std::string experiment;
    std::string params;   // JSON object text
    double lhs = 0.0;
    double rhs_shape = 0.0;
    double ratio = 0.0;
    std::string to_json() const;
};

} // namespace corrlab

#include "corrlab/report.hpp"

#include "json.hpp"

namespace corrlab {

std::string RatioReport::to_json() const
{
    nlohmann::ordered_json j;
    j["experiment"] = experiment;
    j["params"] = nlohmann::ordered_json::parse(params.empty() ? "{}" : params);
    j["lhs"] = lhs;
    j["rhs_shape"] = rhs_shape;
    j["ratio"] = ratio;
    return j.dump();
}

} // namespace corrlab

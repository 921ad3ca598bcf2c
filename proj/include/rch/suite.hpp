#pragma once

#include <functional>
#include <string>
#include <vector>

namespace rch {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0;
    double budget = 0;  // wall-clock limit in seconds, 0 = none
};

struct SuiteOptions {
    // grid step for the predator-prey runs; the full-resolution 1e-3 is far over budget on a desk machine
    double pp_delta = 4e-3;
    // criterion 8 hook: runs the property suites, fills the message, returns overall pass
    std::function<bool(std::string&)> properties;
    // progress lines (probe results etc.); may be empty
    std::function<void(const std::string&)> log;
};

// doctest names of the property suites that make up criterion 8
const std::vector<std::string>& property_test_names();

CriterionResult run_criterion(int id, const SuiteOptions& opt);

// "criterion N  PASS  title  detail  (t s)"
std::string format_result(const CriterionResult& r);

}  // namespace rch

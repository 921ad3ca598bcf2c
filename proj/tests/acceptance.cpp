#define DOCTEST_CONFIG_IMPLEMENT
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include "doctest.h"
#include "rch/suite.hpp"

// runs criteria 1-9; RCH_CRITERIA="3,5" picks a subset
int main(int argc, char** argv) {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    rch::SuiteOptions opt;
    opt.log = [](const std::string& s) { std::printf("%s\n", s.c_str()); };
    opt.properties = [&](std::string& msg) {
        std::string filter;
        for (auto& n : rch::property_test_names()) filter += (filter.empty() ? "" : ",") + n;
        doctest::Context ctx;
        ctx.setOption("test-case", filter.c_str());
        ctx.setOption("no-intro", true);
        ctx.setOption("minimal", true);
        int rc = ctx.run();
        msg = std::to_string(rch::property_test_names().size()) + " suites, " + (rc == 0 ? "all green" : "failures above");
        return rc == 0;
    };
    std::vector<int> ids;
    const char* sel = std::getenv("RCH_CRITERIA");
    if (argc > 1) sel = argv[1];
    if (sel && *sel) {
        std::stringstream ss(sel);
        std::string tok;
        while (std::getline(ss, tok, ',')) ids.push_back(std::stoi(tok));
    } else {
        for (int i = 1; i <= 9; ++i) ids.push_back(i);
    }
    int failed = 0;
    std::vector<std::string> lines;
    for (int id : ids) {
        rch::CriterionResult r = rch::run_criterion(id, opt);
        std::string line = rch::format_result(r);
        std::printf("%s\n", line.c_str());
        lines.push_back(line);
        if (!r.pass) ++failed;
    }
    std::printf("\nsummary\n");
    for (auto& l : lines) std::printf("%s\n", l.c_str());
    std::printf("%d of %zu criteria failed\n", failed, ids.size());
    return failed ? 1 : 0;
}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "infheat/config.hpp"
#include "infheat/homogeneity.hpp"

namespace infheat {

enum class Relation { at_most, at_least, within };

/// One measured quantity compared against a bound.
/// at_most: measured <= bound; at_least: measured >= bound;
/// within: |measured - reference| <= bound.
struct CheckResult {
    std::string name;
    double measured = 0.0;
    double reference = 0.0;
    double bound = 0.0;
    Relation relation = Relation::at_most;
    bool passed = false;
    std::string detail;
};

CheckResult make_check(std::string name, double measured, Relation relation, double bound, double reference = 0.0,
                       std::string detail = {});

struct CheckGroup {
    std::string id;
    std::string title;
    std::vector<CheckResult> checks;
    double seconds = 0.0;
    /// Empty groups fail: a group that measured nothing has not shown anything.
    bool passed() const;
};

struct CheckOptions {
    Mutation mutation = Mutation::none;
    Tolerances tol;
    unsigned workers = 1;
    std::uint64_t seed = 20240611;
    /// Progress lines go here when set.
    std::ostream* log = nullptr;
};

inline constexpr int kAcceptanceCriteria = 11;

/// Ids of the individual check groups: acceptance-1 .. acceptance-11 and the
/// smaller property groups (operator-examples, radial-conservation, ...).
const std::vector<std::string>& check_group_ids();

/// operator, exact, radial, grid, asymptotics, mutation, default, acceptance,
/// plus every group id as a single-group suite.
const std::vector<std::string>& suite_names();

struct SuiteResult {
    std::string suite;
    Mutation mutation = Mutation::none;
    std::vector<CheckGroup> groups;
    double seconds = 0.0;
    bool passed() const;
};

/// Runs the named suite. Groups shared by several criteria (the radial runs
/// behind criteria 5, 7, 8 and 9) are computed once per call.
/// Throws std::invalid_argument for an unknown suite name.
SuiteResult run_suite(std::string_view suite, const CheckOptions& options);

/// Runs a single group by id.
CheckGroup run_group(std::string_view id, const CheckOptions& options);

nlohmann::json to_json(const CheckGroup& group);
nlohmann::json to_json(const SuiteResult& result);

/// `[PASS] name: measured <= bound (detail)`.
std::string format_check(const CheckResult& check);

}  // namespace infheat

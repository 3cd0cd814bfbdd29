#include "gnormal/report_io.hpp"

#include <cstdio>
#include <ostream>

#include "gnormal/numeric_format.hpp"

namespace gnormal {

namespace {

const char* to_string(Sided sided) { return sided == Sided::one ? "one" : "two"; }

const char* to_string(StatisticKind kind) { return kind == StatisticKind::t_student ? "t" : "z"; }

nlohmann::json policy_echo(const PolicySpec& policy) {
    nlohmann::json out{{"kind", policy.name()},
                       {"sigma_lo", policy.band().lo()},
                       {"sigma_hi", policy.band().hi()},
                       {"n", policy.n()},
                       {"alpha", policy.alpha().value()}};
    if (const auto* rule = std::get_if<ConstantRule>(&policy.rule())) out["sigma"] = rule->sigma;
    if (const auto* rule = std::get_if<OneSidedOptimalRule>(&policy.rule())) out["threshold"] = rule->threshold;
    if (const auto* rule = std::get_if<HeuristicTRule>(&policy.rule())) {
        out["critical"] = rule->critical == HeuristicCritical::normal ? "normal" : "t";
    }
    if (const auto* rule = std::get_if<TwoSidedThresholdRule>(&policy.rule())) {
        out["threshold_levels"] = rule->table.size();
    }
    return out;
}

}  // namespace

nlohmann::json config_echo(const SimulationConfig& config) {
    return {{"n", config.n},
            {"reps", config.reps},
            {"seed", config.seed},
            {"noise", "standard_normal"},
            {"policy", policy_echo(config.policy)},
            {"test",
             {{"sided", to_string(config.test.sided)},
              {"alpha", config.test.alpha.value()},
              {"statistic", to_string(config.test.statistic)},
              {"sigma_ref", config.test.sigma_ref}}}};
}

nlohmann::json report_to_json(const SimulationReport& report, const SimulationConfig& config) {
    return {{"reps", report.reps},
            {"rejections", report.rejections},
            {"rate", report.rate},
            {"ci95_lo", report.ci95.lo},
            {"ci95_hi", report.ci95.hi},
            {"degenerate", report.degenerate},
            {"critical_value", report.critical_value},
            {"histogram",
             {{"lo", report.histogram.lo},
              {"hi", report.histogram.hi},
              {"bins", report.histogram.bins},
              {"underflow", report.histogram.underflow},
              {"overflow", report.histogram.overflow}}},
            {"runtime_seconds", report.runtime_seconds},
            {"config_echo", config_echo(config)}};
}

void write_histogram_csv(const Histogram& histogram, std::ostream& out) {
    out << "bin_lo,bin_hi,count\n";
    const double w = histogram.width();
    for (std::size_t i = 0; i < histogram.bins.size(); ++i) {
        const double lo = histogram.lo + w * static_cast<double>(i);
        const double hi = i + 1 == histogram.bins.size() ? histogram.hi : histogram.lo + w * static_cast<double>(i + 1);
        out << shortest(lo) << ',' << shortest(hi) << ',' << histogram.bins[i] << '\n';
    }
}

std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

nlohmann::json make_manifest(std::string_view subcommand, const nlohmann::json& params,
                             const nlohmann::json& checksums) {
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"subcommand", subcommand},
            {"params", params},
            {"checksums", checksums}};
}

}  // namespace gnormal

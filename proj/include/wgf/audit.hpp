#pragma once

#include <string>
#include <vector>

namespace wgf {

/// Structured outcome of an inequality audit. Convention: slack >= -tol
/// means PASS, regardless of the inequality's direction; for multi-time
/// audits lhs/rhs are reported at the worst time.
struct AuditReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tol = 0.0;
    std::string verdict;  // PASS | FAIL | SKIP
    std::string detail;
    std::vector<AuditReport> parts;  // sub-audits, when an audit bundles several

    bool passed() const {
        if (verdict == "FAIL") return false;
        for (const auto& p : parts)
            if (!p.passed()) return false;
        return true;
    }
};

inline AuditReport make_report(std::string name, double lhs, double rhs, double slack, double tol,
                               std::string detail = {}) {
    AuditReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = slack;
    r.tol = tol;
    r.verdict = slack >= -tol ? "PASS" : "FAIL";
    r.detail = std::move(detail);
    return r;
}

inline AuditReport make_skip(std::string name, std::string why) {
    AuditReport r;
    r.name = std::move(name);
    r.verdict = "SKIP";
    r.detail = std::move(why);
    return r;
}

}  // namespace wgf

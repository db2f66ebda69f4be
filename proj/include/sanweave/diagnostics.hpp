#ifndef SANWEAVE_DIAGNOSTICS_HPP
#define SANWEAVE_DIAGNOSTICS_HPP

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sanweave {

/// A single model problem. line/col are 1-based and 0 when the problem is
/// not tied to a source position (e.g. found on an in-memory model).
struct Diagnostic {
    std::string message;
    int line = 0;
    int col = 0;
    std::string object;  // offending object/automaton, if any
    std::string rule;    // short rule tag, e.g. "branch-sum"

    std::string str() const {
        std::ostringstream os;
        if (line > 0) os << line << ":" << col << ": ";
        os << message;
        if (!object.empty()) os << " [object " << object << "]";
        if (!rule.empty()) os << " (" << rule << ")";
        return os.str();
    }
};

inline std::string join_diagnostics(const std::vector<Diagnostic>& ds) {
    std::string out;
    for (const auto& d : ds) {
        if (!out.empty()) out += "\n";
        out += d.str();
    }
    return out;
}

/// Thrown by stages whose contract is "valid input in, result out"
/// (translator, markov engine, simulator). Parsing and validation report
/// diagnostics as values instead.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(Diagnostic d)
        : std::runtime_error(d.str()), diagnostics_{std::move(d)} {}
    explicit ModelError(std::vector<Diagnostic> ds)
        : std::runtime_error(join_diagnostics(ds)), diagnostics_(std::move(ds)) {}
    ModelError(std::string message, std::string rule)
        : ModelError(Diagnostic{std::move(message), 0, 0, "", std::move(rule)}) {}

    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

} // namespace sanweave

#endif

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ocp/engine.hpp"

namespace ocp {

// Thrown on malformed input files; carries the 1-based offending line.
class CsvError : public std::runtime_error {
public:
    CsvError(std::int64_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::int64_t line() const { return line_; }

private:
    std::int64_t line_;
};

// Input stream schemas, keyed by the header line:
//   t,y              response only
//   t,y,x1,...,xd    response with features
//   t,score          precomputed nonconformity scores
struct InputStream {
    bool scores_only = false;
    std::vector<Sample> samples;       // when scores_only is false
    std::vector<double> scores;        // when scores_only is true
    std::size_t feature_dim = 0;
};

InputStream read_input_csv(const std::filesystem::path& path);

// Trace schema: t,y,y_hat,score,radius,lower,upper,covered,width,g,wealth
// covered is 0/1; wealth is empty for gradient methods. Doubles are written
// with shortest round-trip formatting.
void write_trace_csv(const std::filesystem::path& path, std::span<const StepTrace> trace);
std::vector<StepTrace> read_trace_csv(const std::filesystem::path& path);

std::string format_double(double v);

// Plain key=value manifest written alongside every output.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace ocp

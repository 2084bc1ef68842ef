#include "ocp/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ocp {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& field, std::int64_t line) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw CsvError(line, "expected a number, got '" + field + "'");
    }
    if (!std::isfinite(v)) throw CsvError(line, "non-finite value rejected");
    return v;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

InputStream read_input_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(0, "cannot open input file " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw CsvError(1, "missing header line");
    const std::vector<std::string> header = split_fields(strip_cr(line));

    InputStream stream;
    if (header.size() == 2 && header[0] == "t" && header[1] == "score") {
        stream.scores_only = true;
    } else if (header.size() >= 2 && header[0] == "t" && header[1] == "y") {
        stream.feature_dim = header.size() - 2;
        for (std::size_t j = 0; j < stream.feature_dim; ++j) {
            if (header[j + 2] != "x" + std::to_string(j + 1)) {
                throw CsvError(1, "expected feature column x" + std::to_string(j + 1));
            }
        }
    } else {
        throw CsvError(1, "header must be 't,y', 't,y,x1,...,xd' or 't,score'");
    }

    std::int64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        const std::size_t expected = stream.scores_only ? 2 : 2 + stream.feature_dim;
        if (fields.size() != expected) {
            throw CsvError(lineno, "expected " + std::to_string(expected) + " fields, got " +
                                       std::to_string(fields.size()));
        }
        parse_double(fields[0], lineno);  // index column, validated but not stored
        if (stream.scores_only) {
            stream.scores.push_back(parse_double(fields[1], lineno));
        } else {
            Sample s;
            s.y = parse_double(fields[1], lineno);
            s.x.reserve(stream.feature_dim);
            for (std::size_t j = 0; j < stream.feature_dim; ++j) {
                s.x.push_back(parse_double(fields[j + 2], lineno));
            }
            stream.samples.push_back(std::move(s));
        }
    }
    return stream;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const StepTrace> trace) {
    std::ofstream out(path);
    if (!out) throw CsvError(0, "cannot open output file " + path.string());
    out << "t,y,y_hat,score,radius,lower,upper,covered,width,g,wealth\n";
    for (const auto& row : trace) {
        const PredictionInterval interval = make_interval(row.y_hat, row.radius);
        out << row.t << ',' << format_double(row.y) << ',' << format_double(row.y_hat) << ','
            << format_double(row.score) << ',' << format_double(row.radius) << ','
            << format_double(interval.lower) << ',' << format_double(interval.upper) << ','
            << (row.covered ? '1' : '0') << ',' << format_double(row.width) << ','
            << format_double(row.g) << ',';
        if (row.wealth) out << format_double(*row.wealth);
        out << '\n';
    }
}

std::vector<StepTrace> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(0, "cannot open trace file " + path.string());
    std::string line;
    if (!std::getline(in, line) ||
        strip_cr(line) != "t,y,y_hat,score,radius,lower,upper,covered,width,g,wealth") {
        throw CsvError(1, "unexpected trace header");
    }
    std::vector<StepTrace> trace;
    std::int64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 11) throw CsvError(lineno, "expected 11 fields");
        StepTrace row;
        row.t = static_cast<std::int64_t>(parse_double(fields[0], lineno));
        row.y = parse_double(fields[1], lineno);
        row.y_hat = parse_double(fields[2], lineno);
        row.score = parse_double(fields[3], lineno);
        row.radius = parse_double(fields[4], lineno);
        if (fields[7] != "0" && fields[7] != "1") throw CsvError(lineno, "covered must be 0 or 1");
        row.covered = fields[7] == "1";
        row.width = parse_double(fields[8], lineno);
        row.g = parse_double(fields[9], lineno);
        if (!fields[10].empty()) row.wealth = parse_double(fields[10], lineno);
        trace.push_back(row);
    }
    return trace;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path);
    if (!out) throw CsvError(0, "cannot open manifest file " + path.string());
    for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
}

}  // namespace ocp

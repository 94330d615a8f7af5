#include "crbreak/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "crbreak/errors.hpp"

namespace crbreak {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::schema: return "schema error";
        case ErrorKind::parse: return "parse error";
        case ErrorKind::dimension: return "dimension error";
        case ErrorKind::validation: return "validation error";
        case ErrorKind::config: return "configuration error";
        case ErrorKind::parameter: return "parameter error";
        case ErrorKind::io: return "i/o error";
        case ErrorKind::rank: return "rank error";
        case ErrorKind::numeric: return "numeric error";
        case ErrorKind::degenerate: return "degenerate input";
    }
    return "error";
}

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            current.push_back(c);
        } else if (c == ',' && !quoted) {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(trim(current));
    return fields;
}

double parse_cell(const std::string& text, int row, const std::string& column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty() || !std::isfinite(value)) {
        throw Error(ErrorKind::parse, "row " + std::to_string(row) + ", column '" + column +
                                          "': cannot parse '" + text + "' as a finite number");
    }
    return value;
}

void append_number(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

}  // namespace

Sample::Sample(Eigen::VectorXd y, Eigen::MatrixXd d, Eigen::MatrixXd z,
               std::vector<std::string> labels)
    : y_(std::move(y)), d_(std::move(d)), z_(std::move(z)), labels_(std::move(labels)) {
    const Eigen::Index T = y_.size();
    if (d_.cols() == 0) d_.resize(T, 0);
    if (z_.cols() < 1) {
        throw Error(ErrorKind::dimension, "at least one breaking regressor is required (q = 0)");
    }
    if (z_.rows() != T || d_.rows() != T) {
        throw Error(ErrorKind::dimension,
                    "regressor rows (D: " + std::to_string(d_.rows()) +
                        ", Z: " + std::to_string(z_.rows()) + ") differ from T = " +
                        std::to_string(T));
    }
    const Eigen::Index needed = 2 * (z_.cols() + 1) + d_.cols();
    if (T < needed) {
        throw Error(ErrorKind::dimension, "T = " + std::to_string(T) + " is below the floor 2(q+1)+p = " +
                                              std::to_string(needed));
    }
    if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != T) {
        throw Error(ErrorKind::dimension, "label count " + std::to_string(labels_.size()) +
                                              " differs from T = " + std::to_string(T));
    }
    if (!all_finite(y_) || !all_finite(d_) || !all_finite(z_)) {
        throw Error(ErrorKind::validation, "sample contains non-finite values");
    }
}

Eigen::MatrixXd Sample::x() const {
    Eigen::MatrixXd x(size(), p() + q());
    x << d_, z_;
    return x;
}

Eigen::MatrixXd Sample::z_post(int tb) const {
    Eigen::MatrixXd z2 = z_;
    z2.topRows(std::clamp(tb, 0, size())).setZero();
    return z2;
}

DateRange validate(const Sample& sample, const BreakSpec& spec) {
    const int T = sample.size();
    const int q = sample.q();
    const int p = sample.p();
    if (q < 1) throw Error(ErrorKind::dimension, "q = " + std::to_string(q) + " < 1");
    if (T < 2 * (q + 1) + p) {
        throw Error(ErrorKind::dimension, "T = " + std::to_string(T) + " is below the floor 2(q+1)+p = " +
                                              std::to_string(2 * (q + 1) + p));
    }
    if (!(spec.trimming >= 0.0 && spec.trimming < 0.5)) {
        throw Error(ErrorKind::validation,
                    "trimming " + std::to_string(spec.trimming) + " outside [0, 0.5)");
    }
    const int cut = static_cast<int>(std::floor(spec.trimming * T + 1e-9));
    DateRange range{std::max(q, cut), std::min(T - q - 1, T - cut)};
    if (spec.search_lo) range.lo = std::max(range.lo, *spec.search_lo);
    if (spec.search_hi) range.hi = std::min(range.hi, *spec.search_hi);
    if (spec.search_lo && *spec.search_lo < q) {
        throw Error(ErrorKind::validation,
                    "search_lo " + std::to_string(*spec.search_lo) + " < q = " + std::to_string(q));
    }
    if (spec.search_hi && *spec.search_hi > T - q - 1) {
        throw Error(ErrorKind::validation, "search_hi " + std::to_string(*spec.search_hi) +
                                               " > T-q-1 = " + std::to_string(T - q - 1));
    }
    if (range.lo > range.hi) {
        throw Error(ErrorKind::validation, "empty search range [" + std::to_string(range.lo) + ", " +
                                               std::to_string(range.hi) + "]");
    }
    return range;
}

Sample read_sample(std::istream& in, const ColumnSchema& schema) {
    if (schema.y.empty()) throw Error(ErrorKind::schema, "schema names no y column");
    if (schema.z.empty()) throw Error(ErrorKind::schema, "schema names no Z column");

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::parse, "empty input: missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
    const auto header = split_csv_line(line);
    std::unordered_map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) index.emplace(header[i], i);

    auto column = [&](const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) throw Error(ErrorKind::schema, "missing column '" + name + "'");
        return it->second;
    };
    const int yc = column(schema.y);
    std::vector<int> dc;
    std::vector<int> zc;
    for (const auto& n : schema.d) dc.push_back(column(n));
    for (const auto& n : schema.z) zc.push_back(column(n));
    const int lc = schema.label.empty() ? -1 : column(schema.label);

    std::vector<double> ys;
    std::vector<std::vector<double>> ds(dc.size());
    std::vector<std::vector<double>> zs(zc.size());
    std::vector<std::string> labels;
    int row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": expected " +
                                              std::to_string(header.size()) + " fields, got " +
                                              std::to_string(fields.size()));
        }
        ys.push_back(parse_cell(fields[yc], row, schema.y));
        for (std::size_t j = 0; j < dc.size(); ++j) ds[j].push_back(parse_cell(fields[dc[j]], row, schema.d[j]));
        for (std::size_t j = 0; j < zc.size(); ++j) zs[j].push_back(parse_cell(fields[zc[j]], row, schema.z[j]));
        if (lc >= 0) labels.push_back(fields[lc]);
    }

    const Eigen::Index T = static_cast<Eigen::Index>(ys.size());
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), T);
    Eigen::MatrixXd d(T, static_cast<Eigen::Index>(dc.size()));
    Eigen::MatrixXd z(T, static_cast<Eigen::Index>(zc.size()));
    for (std::size_t j = 0; j < dc.size(); ++j) d.col(j) = Eigen::Map<Eigen::VectorXd>(ds[j].data(), T);
    for (std::size_t j = 0; j < zc.size(); ++j) z.col(j) = Eigen::Map<Eigen::VectorXd>(zs[j].data(), T);
    return Sample(std::move(y), std::move(d), std::move(z), std::move(labels));
}

Sample load_sample(const std::filesystem::path& path, const ColumnSchema& schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    return read_sample(in, schema);
}

ColumnSchema write_sample(std::ostream& out, const Sample& sample) {
    ColumnSchema schema;
    schema.y = "y";
    for (int j = 0; j < sample.p(); ++j) schema.d.push_back("d" + std::to_string(j + 1));
    for (int j = 0; j < sample.q(); ++j) schema.z.push_back("z" + std::to_string(j + 1));
    if (!sample.labels().empty()) schema.label = "label";

    std::string text = "y";
    for (const auto& n : schema.d) text += "," + n;
    for (const auto& n : schema.z) text += "," + n;
    if (!schema.label.empty()) text += ",label";
    text += '\n';
    for (int t = 0; t < sample.size(); ++t) {
        append_number(text, sample.y()(t));
        for (int j = 0; j < sample.p(); ++j) {
            text += ',';
            append_number(text, sample.d()(t, j));
        }
        for (int j = 0; j < sample.q(); ++j) {
            text += ',';
            append_number(text, sample.z()(t, j));
        }
        if (!schema.label.empty()) text += "," + sample.labels()[t];
        text += '\n';
    }
    out << text;
    return schema;
}

}  // namespace crbreak

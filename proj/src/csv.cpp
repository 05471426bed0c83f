#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "combu/dataset.hpp"
#include "combu/error.hpp"

namespace combu {

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

std::vector<Record> tokenize(const std::string& text) {
    std::vector<Record> records;
    Record rec;
    std::string field;
    bool in_quotes = false, field_started = false;
    std::size_t line = 1;
    rec.line = line;

    auto end_field = [&] {
        rec.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // a blank line carries no data
        if (!(rec.fields.size() == 1 && rec.fields[0].empty())) records.push_back(std::move(rec));
        rec = Record{};
        rec.line = line;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started)
                throw ParseError("csv: stray quote at line " + std::to_string(line) + ", column " +
                                 std::to_string(rec.fields.size() + 1));
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') break;
            [[fallthrough]];
        case '\n':
            ++line;
            end_record();
            break;
        default:
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("csv: unterminated quoted field at line " + std::to_string(rec.line));
    if (field_started || !rec.fields.empty()) end_record();
    return records;
}

std::string where(const Record& rec, std::size_t col, const std::string& name) {
    return "line " + std::to_string(rec.line) + ", column " + std::to_string(col + 1) + " ('" + name + "')";
}

double parse_number(const std::string& s, const Record& rec, std::size_t col, const std::string& name) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
        throw ParseError("csv: cannot parse '" + s + "' as a number at " + where(rec, col, name));
    return v;
}

}  // namespace

std::string csv_format(const TabularDataset& ds) {
    ds.validate();
    std::string out;
    std::vector<std::string> header;
    for (const auto& n : ds.feature_names) header.push_back(n);
    for (const auto& n : ds.categorical_names) header.push_back(n);
    header.push_back(ds.target_name);
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + quote(header[i]);
    out += '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t c = 0; c < ds.feature_names.size(); ++c) {
            out += format_number(ds.features(r, c));
            out += ',';
        }
        for (const auto& col : ds.categorical) {
            out += quote(col[r]);
            out += ',';
        }
        if (ds.task == TaskKind::Classification && !ds.class_labels.empty())
            out += quote(ds.class_labels[static_cast<std::size_t>(ds.target[r])]);
        else
            out += format_number(ds.target[r]);
        out += '\n';
    }
    return out;
}

void csv_write(const std::string& path, const TabularDataset& ds) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << csv_format(ds);
    if (!f) throw Error("failed writing '" + path + "'");
}

TabularDataset csv_parse(const std::string& text, const CsvSchema& schema) {
    const auto records = tokenize(text);
    if (records.empty()) throw SchemaError("csv: missing header row");
    const auto& header = records.front().fields;

    const auto target_it = std::find(header.begin(), header.end(), schema.target);
    if (target_it == header.end()) throw SchemaError("csv: target column '" + schema.target + "' not found");
    const auto target_col = static_cast<std::size_t>(target_it - header.begin());
    for (const auto& c : schema.categorical) {
        if (std::find(header.begin(), header.end(), c) == header.end())
            throw SchemaError("csv: categorical column '" + c + "' not found");
        if (c == schema.target) throw SchemaError("csv: target column cannot also be categorical");
    }

    enum class Role { Numeric, Categorical, Target };
    std::vector<Role> roles(header.size(), Role::Numeric);
    std::vector<std::size_t> slot(header.size(), 0);
    TabularDataset ds;
    ds.target_name = schema.target;
    ds.task = schema.task;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == target_col) {
            roles[c] = Role::Target;
        } else if (std::find(schema.categorical.begin(), schema.categorical.end(), header[c]) !=
                   schema.categorical.end()) {
            roles[c] = Role::Categorical;
            slot[c] = ds.categorical_names.size();
            ds.categorical_names.push_back(header[c]);
        } else {
            slot[c] = ds.feature_names.size();
            ds.feature_names.push_back(header[c]);
        }
    }

    const std::size_t n = records.size() - 1;
    ds.features = Matrix(n, ds.feature_names.size());
    ds.categorical.assign(ds.categorical_names.size(), std::vector<std::string>(n));
    ds.target.resize(n);
    std::vector<std::string> raw_labels(schema.task == TaskKind::Classification ? n : 0);

    for (std::size_t r = 0; r < n; ++r) {
        const Record& rec = records[r + 1];
        if (rec.fields.size() != header.size())
            throw ParseError("csv: line " + std::to_string(rec.line) + " has " + std::to_string(rec.fields.size()) +
                             " fields, expected " + std::to_string(header.size()));
        for (std::size_t c = 0; c < header.size(); ++c) {
            const std::string& s = rec.fields[c];
            if (s.empty()) throw SchemaError("csv: missing value at " + where(rec, c, header[c]));
            switch (roles[c]) {
            case Role::Numeric:
                ds.features(r, slot[c]) = parse_number(s, rec, c, header[c]);
                break;
            case Role::Categorical:
                ds.categorical[slot[c]][r] = s;
                break;
            case Role::Target:
                if (schema.task == TaskKind::Classification) raw_labels[r] = s;
                else ds.target[r] = parse_number(s, rec, c, header[c]);
                break;
            }
        }
    }

    if (schema.task == TaskKind::Classification) {
        std::vector<std::string> labels = raw_labels;
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        // numeric labels keep their numeric order
        const bool numeric = std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
            double v;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            return res.ec == std::errc{} && res.ptr == s.data() + s.size();
        });
        if (numeric)
            std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
                return std::stod(a) < std::stod(b);
            });
        if (labels.size() < 2) throw SchemaError("csv: classification target needs at least 2 classes");
        for (std::size_t r = 0; r < n; ++r)
            ds.target[r] = static_cast<double>(std::find(labels.begin(), labels.end(), raw_labels[r]) - labels.begin());
        ds.n_classes = labels.size();
        ds.class_labels = std::move(labels);
    }
    ds.validate();
    return ds;
}

TabularDataset csv_read(const std::string& path, const CsvSchema& schema) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return csv_parse(buf.str(), schema);
}

}  // namespace combu

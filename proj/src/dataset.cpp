#include "margex/dataset.hpp"

#include "margex/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace margex {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

[[noreturn]] void parse_fail(const std::string& path, size_t line_no,
                             const std::string& what) {
    throw Error(ErrorKind::Parse,
                path + ":" + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& s, const std::string& path, size_t line_no,
                    const char* field) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line_no, std::string("bad ") + field + " value '" + s + "'");
    }
}

int64_t parse_int(const std::string& s, const std::string& path, size_t line_no,
                  const char* field) {
    try {
        size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line_no, std::string("bad ") + field + " value '" + s + "'");
    }
}

} // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::Io, "cannot open " + path + " for writing");

    const bool with_theta =
        !ds.records.empty() && ds.records.front().theta.has_value();

    out << "# provenance: spec=" << ds.provenance.spec_digest
        << " seed=" << ds.provenance.seed << " n_pre=" << ds.provenance.n_pre
        << " n_post=" << ds.provenance.n_post
        << " covariate=" << ds.provenance.covariate_mode << "\n";
    out << "firm_id,regime,x,d,outcome";
    if (with_theta) out << ",theta";
    out << "\n";

    for (const auto& r : ds.records) {
        out << r.firm_id << "," << r.regime << "," << g17(r.x) << "," << r.d << ",";
        if (r.outcome) out << g17(*r.outcome);
        if (with_theta) out << "," << (r.theta ? g17(*r.theta) : "");
        out << "\n";
    }
    out.flush();
    if (!out)
        throw Error(ErrorKind::Io, "failed writing dataset to " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path + " for reading");

    Dataset ds;
    std::string line;
    size_t line_no = 0;
    bool header_seen = false;
    bool with_theta = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string tok;
            ss >> tok; // "provenance:"
            while (ss >> tok) {
                auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "spec") ds.provenance.spec_digest = val;
                else if (key == "seed") ds.provenance.seed = std::stoull(val);
                else if (key == "n_pre") ds.provenance.n_pre = std::stoll(val);
                else if (key == "n_post") ds.provenance.n_post = std::stoll(val);
                else if (key == "covariate") ds.provenance.covariate_mode = val;
            }
            continue;
        }
        if (!header_seen) {
            if (line == "firm_id,regime,x,d,outcome,theta")
                with_theta = true;
            else if (line != "firm_id,regime,x,d,outcome")
                parse_fail(path, line_no, "unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }

        const auto fields = split_csv(line);
        const size_t want = with_theta ? 6u : 5u;
        if (fields.size() != want)
            parse_fail(path, line_no,
                       "expected " + std::to_string(want) + " columns, got " +
                           std::to_string(fields.size()));

        FirmRecord r;
        r.firm_id = parse_int(fields[0], path, line_no, "firm_id");
        r.regime = static_cast<int>(parse_int(fields[1], path, line_no, "regime"));
        if (r.regime != 0 && r.regime != 1)
            parse_fail(path, line_no, "regime must be 0 or 1");
        r.x = parse_double(fields[2], path, line_no, "x");
        r.d = static_cast<int>(parse_int(fields[3], path, line_no, "d"));
        if (r.d != 0 && r.d != 1)
            parse_fail(path, line_no, "d must be 0 or 1");
        if (fields[4].empty()) {
            if (r.d == 1)
                parse_fail(path, line_no, "participant row is missing its outcome");
        } else {
            if (r.d == 0)
                parse_fail(path, line_no, "outcome present on a d=0 row");
            r.outcome = parse_double(fields[4], path, line_no, "outcome");
        }
        if (with_theta && !fields[5].empty())
            r.theta = parse_double(fields[5], path, line_no, "theta");
        ds.records.push_back(std::move(r));
    }
    if (!header_seen)
        throw Error(ErrorKind::Parse, path + ": missing dataset header");
    return ds;
}

} // namespace margex

#include "qmdn/data.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qmdn {

GaussianMixture double_slit_truth(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument(
            "double slit barrier position must lie in [0, 1]");
    }
    // Interference pattern (weight 1-x) plus classical two-slit pattern
    // (weight x); together a seven-component mixture summing to one.
    const double quantum = 1.0 - x;
    return GaussianMixture(
        {quantum * 0.35, quantum * 0.2, quantum * 0.2, quantum * 0.125,
         quantum * 0.125, x * 0.5, x * 0.5},
        {0.0, 1.0, -1.0, 2.0, -2.0, 1.0, -1.0},
        {0.15, 0.15, 0.15, 0.15, 0.15, 0.1, 0.1});
}

double double_slit_pdf(double x, double y) {
    return double_slit_truth(x).pdf(y);
}

Dataset gen_double_slit(std::size_t n, Rng& rng) {
    if (n == 0) {
        throw std::invalid_argument("dataset size must be positive");
    }
    Dataset ds;
    ds.pairs.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = rng.uniform();
        ds.pairs.emplace_back(x, double_slit_truth(x).sample(rng));
    }
    ds.meta.generator = "double_slit";
    ds.meta.n = n;
    ds.meta.params = "x~U[0,1)";
    return ds;
}

std::vector<double> logistic_series(double x, double y0, std::size_t discard,
                                    std::size_t keep) {
    if (!(x >= 0.0 && x <= 4.0)) {
        throw std::invalid_argument("logistic rate must lie in [0, 4]");
    }
    if (!(y0 > 0.0 && y0 < 1.0)) {
        throw std::invalid_argument("logistic start must lie in (0, 1)");
    }
    std::vector<double> out;
    out.reserve(keep);
    double y = y0;
    for (std::size_t k = 0; k < discard + keep; ++k) {
        y = x * y * (1.0 - y);
        if (k >= discard) {
            out.push_back(y);
        }
    }
    return out;
}

Dataset gen_logistic(std::size_t n_x, std::size_t per_x) {
    if (n_x == 0 || per_x == 0) {
        throw std::invalid_argument("logistic grid counts must be positive");
    }
    const double step = 1.5 / static_cast<double>(n_x);
    Dataset ds;
    ds.pairs.reserve(n_x * per_x);
    for (std::size_t k = 0; k < n_x; ++k) {
        const double x = 2.5 + static_cast<double>(k) * step;
        for (double y : logistic_series(x, 0.5, 5, per_x)) {
            ds.pairs.emplace_back(x, y);
        }
    }
    ds.meta.generator = "logistic";
    ds.meta.n = ds.pairs.size();
    std::ostringstream params;
    params << "y0=0.5 discard=5 x=[2.5,4) n_x=" << n_x << " per_x=" << per_x;
    ds.meta.params = params.str();
    return ds;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::filesystem::path meta_path(const std::filesystem::path& path) {
    std::filesystem::path p = path;
    p += ".meta";
    return p;
}

double parse_field(const std::string& tok, const std::filesystem::path& path,
                   std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v)) {
        throw std::runtime_error(path.string() + ":" +
                                 std::to_string(line_no) +
                                 ": bad numeric field '" + tok + "'");
    }
    return v;
}

} // namespace

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "x,y\n";
    for (const auto& [x, y] : ds.pairs) {
        out << fmt17(x) << "," << fmt17(y) << "\n";
    }
    if (!out) {
        throw std::runtime_error("failed while writing " + path.string());
    }

    std::ofstream meta(meta_path(path));
    if (!meta) {
        throw std::runtime_error("cannot write " + meta_path(path).string());
    }
    meta << "generator " << ds.meta.generator << "\n";
    meta << "seed " << ds.meta.seed << "\n";
    meta << "n " << ds.pairs.size() << "\n";
    meta << "params " << ds.meta.params << "\n";
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "x,y") {
        throw std::runtime_error(path.string() +
                                 ": expected 'x,y' header line");
    }
    Dataset ds;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error(path.string() + ":" +
                                     std::to_string(line_no) +
                                     ": expected two comma-separated fields");
        }
        const double x = parse_field(line.substr(0, comma), path, line_no);
        const double y = parse_field(line.substr(comma + 1), path, line_no);
        ds.pairs.emplace_back(x, y);
    }
    if (ds.pairs.empty()) {
        throw std::runtime_error(path.string() + ": no data rows");
    }

    ds.meta.n = ds.pairs.size();
    std::ifstream meta(meta_path(path));
    if (meta) {
        std::string key;
        while (meta >> key) {
            if (key == "generator") {
                meta >> ds.meta.generator;
            } else if (key == "seed") {
                meta >> ds.meta.seed;
            } else if (key == "n") {
                std::size_t recorded = 0;
                meta >> recorded;
                if (recorded != ds.pairs.size()) {
                    throw std::runtime_error(
                        meta_path(path).string() +
                        ": row count does not match the data file");
                }
            } else if (key == "params") {
                std::getline(meta, ds.meta.params);
                if (!ds.meta.params.empty() && ds.meta.params.front() == ' ') {
                    ds.meta.params.erase(0, 1);
                }
            } else {
                throw std::runtime_error(meta_path(path).string() +
                                         ": unknown key '" + key + "'");
            }
        }
    }
    return ds;
}

} // namespace qmdn

#include "qmdn/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>

namespace qmdn {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double normalized_input(double x, double x_min, double x_max) {
    if (!(x_max > x_min)) {
        throw std::invalid_argument(
            "model normalization bounds must satisfy x_min < x_max");
    }
    return (x - x_min) / (x_max - x_min);
}

/// Hidden activations and raw outputs of the classical network.
struct ClassicalTrace {
    double input = 0.0;
    std::vector<double> hidden;
    std::vector<double> out;
};

ClassicalTrace classical_trace(const ClassicalMdn& model, double x) {
    constexpr std::size_t h = ClassicalMdn::kHidden;
    constexpr std::size_t o = ClassicalMdn::kOutputs;
    if (model.params.size() != h + h + o * h + o) {
        throw std::invalid_argument("classical parameter vector has wrong size");
    }
    const double* w1 = model.params.data();
    const double* b1 = w1 + h;
    const double* w2 = b1 + h;
    const double* b2 = w2 + o * h;

    ClassicalTrace trace;
    trace.input = x;
    trace.hidden.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        trace.hidden[j] = std::tanh(w1[j] * trace.input + b1[j]);
    }
    trace.out.resize(o);
    for (std::size_t k = 0; k < o; ++k) {
        double acc = b2[k];
        for (std::size_t j = 0; j < h; ++j) {
            acc += w2[k * h + j] * trace.hidden[j];
        }
        trace.out[k] = acc;
    }
    return trace;
}

std::vector<double> softmax(std::span<const double> logits) {
    double top = logits[0];
    for (double z : logits) {
        top = std::max(top, z);
    }
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - top);
        sum += p[i];
    }
    for (double& v : p) {
        v /= sum;
    }
    return p;
}

GaussianMixture mixture_from_trace(const ClassicalTrace& trace) {
    constexpr std::size_t k = ClassicalMdn::kModes;
    std::vector<double> weights =
        softmax(std::span(trace.out).subspan(0, k));
    std::vector<double> means(trace.out.begin() + k,
                              trace.out.begin() + 2 * k);
    std::vector<double> stds(k);
    for (std::size_t i = 0; i < k; ++i) {
        stds[i] = std::exp(trace.out[2 * k + i]);
    }
    return GaussianMixture(std::move(weights), std::move(means),
                           std::move(stds));
}

CircuitParams head_params(const QMdn& model, std::size_t head) {
    const std::size_t n = model.spec.param_count();
    if (model.params.size() != 3 * n) {
        throw std::invalid_argument("qmdn parameter vector has wrong size");
    }
    const auto begin = model.params.begin() + static_cast<long>(head * n);
    return CircuitParams{std::vector<double>(begin, begin + static_cast<long>(n))};
}

} // namespace

std::size_t param_count(const ClassicalMdn&) {
    constexpr std::size_t h = ClassicalMdn::kHidden;
    constexpr std::size_t o = ClassicalMdn::kOutputs;
    return h + h + o * h + o;
}

std::size_t param_count(const QMdn& model) {
    return 3 * model.spec.param_count();
}

GaussianMixture forward_classical(const ClassicalMdn& model, double x) {
    return mixture_from_trace(classical_trace(model, x));
}

GaussianMixture forward_qmdn(const QMdn& model, double x) {
    const double x_angle =
        kPi * normalized_input(x, model.x_min, model.x_max);
    const std::vector<double> p_alpha =
        run_circuit(model.spec, head_params(model, 0), x_angle);
    const std::vector<double> p_mu =
        run_circuit(model.spec, head_params(model, 1), x_angle);
    const std::vector<double> p_sigma =
        run_circuit(model.spec, head_params(model, 2), x_angle);
    return mixture_from_state_probs(p_alpha, p_mu, p_sigma,
                                    model.sigma_scale);
}

BackwardResult backward_classical(const ClassicalMdn& model, double x,
                                  double y) {
    constexpr std::size_t h = ClassicalMdn::kHidden;
    constexpr std::size_t k = ClassicalMdn::kModes;
    constexpr std::size_t o = ClassicalMdn::kOutputs;
    const ClassicalTrace trace = classical_trace(model, x);
    const GaussianMixture gm = mixture_from_trace(trace);
    const MixtureGradient mix_grad = nll_gradient(gm, y);

    // Pull the mixture-space gradient back onto the 15 raw outputs.
    std::vector<double> d_out(o);
    const auto alpha = gm.weights();
    double alpha_dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        alpha_dot += alpha[i] * mix_grad.d_weight[i];
    }
    for (std::size_t i = 0; i < k; ++i) {
        d_out[i] = alpha[i] * (mix_grad.d_weight[i] - alpha_dot);
        d_out[k + i] = mix_grad.d_mean[i];
        // sigma = exp(raw) unless the floor took over, in which case the
        // parameter has no local influence.
        const double sigma = std::exp(trace.out[2 * k + i]);
        d_out[2 * k + i] =
            sigma > kSigmaFloor ? mix_grad.d_std[i] * sigma : 0.0;
    }

    const double* w2 = model.params.data() + 2 * h;
    BackwardResult result;
    result.loss = -gm.log_pdf(y);
    result.grad.assign(model.params.size(), 0.0);
    double* g_w1 = result.grad.data();
    double* g_b1 = g_w1 + h;
    double* g_w2 = g_b1 + h;
    double* g_b2 = g_w2 + o * h;
    for (std::size_t j = 0; j < h; ++j) {
        double d_hidden = 0.0;
        for (std::size_t kk = 0; kk < o; ++kk) {
            g_w2[kk * h + j] = d_out[kk] * trace.hidden[j];
            d_hidden += d_out[kk] * w2[kk * h + j];
        }
        const double d_pre =
            d_hidden * (1.0 - trace.hidden[j] * trace.hidden[j]);
        g_w1[j] = d_pre * trace.input;
        g_b1[j] = d_pre;
    }
    for (std::size_t kk = 0; kk < o; ++kk) {
        g_b2[kk] = d_out[kk];
    }
    return result;
}

BackwardResult backward_qmdn(const QMdn& model, double x, double y) {
    const double x_angle =
        kPi * normalized_input(x, model.x_min, model.x_max);
    const CircuitParams alpha_head = head_params(model, 0);
    const CircuitParams mu_head = head_params(model, 1);
    const CircuitParams sigma_head = head_params(model, 2);
    const std::vector<double> p_alpha =
        run_circuit(model.spec, alpha_head, x_angle);
    const std::vector<double> p_mu = run_circuit(model.spec, mu_head, x_angle);
    const std::vector<double> p_sigma =
        run_circuit(model.spec, sigma_head, x_angle);
    const GaussianMixture gm =
        mixture_from_state_probs(p_alpha, p_mu, p_sigma, model.sigma_scale);

    const MixtureGradient mix_grad = nll_gradient(gm, y);
    const StateProbCotangents cot = state_prob_cotangents(
        p_alpha, p_mu, p_sigma, model.sigma_scale, mix_grad);

    BackwardResult result;
    result.loss = -gm.log_pdf(y);
    result.grad.reserve(param_count(model));
    for (const auto& [head, cotangent] :
         {std::pair(&alpha_head, &cot.alpha), std::pair(&mu_head, &cot.mu),
          std::pair(&sigma_head, &cot.sigma)}) {
        const std::vector<double> g =
            circuit_gradient(model.spec, *head, x_angle, *cotangent);
        result.grad.insert(result.grad.end(), g.begin(), g.end());
    }
    return result;
}

ClassicalMdn init_classical(Rng& rng) {
    ClassicalMdn model;
    model.params.resize(param_count(model));
    for (double& p : model.params) {
        p = rng.normal(0.0, 0.05);
    }
    return model;
}

QMdn init_qmdn(Rng& rng) {
    QMdn model;
    model.spec = CircuitSpec::ring(3, 4);
    model.params.resize(param_count(model));
    for (double& p : model.params) {
        p = rng.normal(0.0, 0.05);
    }
    return model;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Pull-based token reader with strict expectations; any mismatch reports
/// the offending token.
class TokenReader {
  public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string next(const char* what) {
        std::string tok;
        if (!(in_ >> tok)) {
            throw std::runtime_error(std::string("model file ended early, expected ") +
                                     what);
        }
        return tok;
    }

    void expect(const char* literal) {
        const std::string tok = next(literal);
        if (tok != literal) {
            throw std::runtime_error(std::string("model file: expected '") +
                                     literal + "', found '" + tok + "'");
        }
    }

    double real(const char* what) {
        const std::string tok = next(what);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) {
            throw std::runtime_error(std::string("model file: bad number for ") +
                                     what + ": '" + tok + "'");
        }
        return v;
    }

    std::size_t count(const char* what) {
        const double v = real(what);
        if (v < 0.0 || v != std::floor(v)) {
            throw std::runtime_error(std::string("model file: bad count for ") +
                                     what);
        }
        return static_cast<std::size_t>(v);
    }

  private:
    std::istream& in_;
};

void write_preamble(std::ostream& out, const char* kind, double x_min,
                    double x_max) {
    out << "qmdn-model v1\n";
    out << "kind " << kind << "\n";
    out << "x_min " << fmt17(x_min) << "\n";
    out << "x_max " << fmt17(x_max) << "\n";
}

void write_params(std::ostream& out, const std::vector<double>& params) {
    out << "params " << params.size() << "\n";
    for (double p : params) {
        out << fmt17(p) << "\n";
    }
}

std::string read_preamble(TokenReader& tokens, double& x_min, double& x_max) {
    tokens.expect("qmdn-model");
    tokens.expect("v1");
    tokens.expect("kind");
    const std::string kind = tokens.next("model kind");
    tokens.expect("x_min");
    x_min = tokens.real("x_min");
    tokens.expect("x_max");
    x_max = tokens.real("x_max");
    if (!(x_max > x_min)) {
        throw std::runtime_error("model file: x_min must be below x_max");
    }
    return kind;
}

std::vector<double> read_params(TokenReader& tokens, std::size_t expected) {
    tokens.expect("params");
    const std::size_t n = tokens.count("parameter count");
    if (n != expected) {
        throw std::runtime_error("model file: unexpected parameter count");
    }
    std::vector<double> params(n);
    for (double& p : params) {
        p = tokens.real("parameter");
        if (!std::isfinite(p)) {
            throw std::runtime_error("model file: non-finite parameter");
        }
    }
    return params;
}

} // namespace

void save_model(const ClassicalMdn& model, std::ostream& out) {
    write_preamble(out, "classical", model.x_min, model.x_max);
    out << "n_modes " << ClassicalMdn::kModes << "\n";
    write_params(out, model.params);
    if (!out) {
        throw std::runtime_error("failed to write model stream");
    }
}

void save_model(const QMdn& model, std::ostream& out) {
    write_preamble(out, "qmdn", model.x_min, model.x_max);
    out << "sigma_scale " << fmt17(model.sigma_scale) << "\n";
    out << "n_qubits " << model.spec.n_qubits << "\n";
    out << "n_layers " << model.spec.n_layers << "\n";
    out << "entangler " << model.spec.entangler.size() << "\n";
    for (const auto& [control, target] : model.spec.entangler) {
        out << control << " " << target << "\n";
    }
    write_params(out, model.params);
    if (!out) {
        throw std::runtime_error("failed to write model stream");
    }
}

ClassicalMdn load_classical(std::istream& in) {
    TokenReader tokens(in);
    ClassicalMdn model;
    const std::string kind = read_preamble(tokens, model.x_min, model.x_max);
    if (kind != "classical") {
        throw std::runtime_error("model file holds kind '" + kind +
                                 "', expected 'classical'");
    }
    tokens.expect("n_modes");
    if (tokens.count("n_modes") != ClassicalMdn::kModes) {
        throw std::runtime_error("model file: unsupported mode count");
    }
    model.params = read_params(tokens, param_count(model));
    return model;
}

QMdn load_qmdn(std::istream& in) {
    TokenReader tokens(in);
    QMdn model;
    const std::string kind = read_preamble(tokens, model.x_min, model.x_max);
    if (kind != "qmdn") {
        throw std::runtime_error("model file holds kind '" + kind +
                                 "', expected 'qmdn'");
    }
    tokens.expect("sigma_scale");
    model.sigma_scale = tokens.real("sigma_scale");
    if (!(model.sigma_scale > 0.0)) {
        throw std::runtime_error("model file: sigma_scale must be positive");
    }
    tokens.expect("n_qubits");
    model.spec.n_qubits = tokens.count("n_qubits");
    tokens.expect("n_layers");
    model.spec.n_layers = tokens.count("n_layers");
    tokens.expect("entangler");
    const std::size_t pairs = tokens.count("entangler pair count");
    model.spec.entangler.clear();
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::size_t control = tokens.count("entangler control");
        const std::size_t target = tokens.count("entangler target");
        model.spec.entangler.emplace_back(control, target);
    }
    model.spec.validate();
    model.params = read_params(tokens, param_count(model));
    return model;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return in;
}

} // namespace

void save_model(const ClassicalMdn& model,
                const std::filesystem::path& path) {
    auto out = open_for_write(path);
    save_model(model, out);
}

void save_model(const QMdn& model, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    save_model(model, out);
}

ClassicalMdn load_classical(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    return load_classical(in);
}

QMdn load_qmdn(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    return load_qmdn(in);
}

std::string model_kind_of(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    TokenReader tokens(in);
    tokens.expect("qmdn-model");
    tokens.expect("v1");
    tokens.expect("kind");
    return tokens.next("model kind");
}

} // namespace qmdn

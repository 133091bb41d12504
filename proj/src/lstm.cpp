#include "rnnsamp/lstm.hpp"

#include <algorithm>
#include <cmath>

#include "rnnsamp/rng.hpp"

namespace rnnsamp {

std::string to_string(OutputActivation a) {
    return a == OutputActivation::tanh ? "tanh" : "sigmoid";
}

OutputActivation parse_activation(const std::string& name) {
    if (name == "tanh") return OutputActivation::tanh;
    if (name == "sigmoid") return OutputActivation::sigmoid;
    throw ParameterError("unknown output activation \"" + name + "\" (expected tanh or sigmoid)");
}

std::pair<double, double> activation_range(OutputActivation a) {
    return a == OutputActivation::tanh ? std::pair{-1.0, 1.0} : std::pair{0.0, 1.0};
}

void ArchitectureSpec::validate() const {
    if (nc < 1) throw ParameterError("nc must be at least 1");
    if (lb < 1) throw ParameterError("lb must be at least 1");
    if (n_inputs < 1) throw ParameterError("n_inputs must be at least 1");
    if (n_outputs < 1) throw ParameterError("n_outputs must be at least 1");
}

std::vector<LayoutSegment> weight_layout(const ArchitectureSpec& arch) {
    static constexpr const char* gate_names[4] = {"input", "forget", "cell", "output"};
    std::vector<LayoutSegment> out;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        out.push_back({std::move(name), offset, rows, cols});
        offset += rows * cols;
    };
    for (const char* g : gate_names) add(std::string("kernel_") + g, arch.n_inputs, arch.nc);
    for (const char* g : gate_names) add(std::string("recurrent_") + g, arch.nc, arch.nc);
    for (const char* g : gate_names) add(std::string("bias_") + g, 1, arch.nc);
    add("dense_kernel", arch.nc, arch.n_outputs);
    add("dense_bias", 1, arch.n_outputs);
    return out;
}

std::size_t param_count(const ArchitectureSpec& arch) {
    return 4 * arch.nc * (arch.n_inputs + arch.nc + 1) + arch.nc * arch.n_outputs + arch.n_outputs;
}

WeightSet sample_weights(const ArchitectureSpec& arch, std::uint64_t seed) {
    arch.validate();
    WeightSet w{arch, std::vector<double>(param_count(arch))};
    for (std::size_t j = 0; j < w.params.size(); ++j) w.params[j] = counter_normal(seed, j);
    return w;
}

WeightSet glorot_weights(const ArchitectureSpec& arch, std::uint64_t seed) {
    arch.validate();
    WeightSet w{arch, std::vector<double>(param_count(arch), 0.0)};
    std::uint64_t counter = 0;
    for (const auto& seg : weight_layout(arch)) {
        if (seg.name.starts_with("bias") || seg.name == "dense_bias") {
            if (seg.name == "bias_forget") {
                std::fill_n(w.params.begin() + static_cast<std::ptrdiff_t>(seg.offset), seg.size(), 1.0);
            }
            continue;
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(seg.rows + seg.cols));
        for (std::size_t k = 0; k < seg.size(); ++k) {
            w.params[seg.offset + k] = limit * (2.0 * counter_uniform(seed, counter++) - 1.0);
        }
    }
    return w;
}

GateParams unflatten(const WeightSet& w) {
    const auto layout = weight_layout(w.arch);
    if (w.params.size() != param_count(w.arch)) throw DimensionError("weight vector length mismatch");
    auto take = [&](const LayoutSegment& s) {
        return std::vector<double>(w.params.begin() + static_cast<std::ptrdiff_t>(s.offset),
                                   w.params.begin() + static_cast<std::ptrdiff_t>(s.offset + s.size()));
    };
    GateParams g;
    for (std::size_t k = 0; k < 4; ++k) {
        g.kernel[k] = Matrix(layout[k].rows, layout[k].cols, take(layout[k]));
        g.recurrent[k] = Matrix(layout[4 + k].rows, layout[4 + k].cols, take(layout[4 + k]));
        g.bias[k] = take(layout[8 + k]);
    }
    g.dense_kernel = Matrix(layout[12].rows, layout[12].cols, take(layout[12]));
    g.dense_bias = take(layout[13]);
    return g;
}

WeightSet flatten(const ArchitectureSpec& arch, const GateParams& g) {
    WeightSet w{arch, {}};
    w.params.reserve(param_count(arch));
    auto put = [&](const std::vector<double>& v) { w.params.insert(w.params.end(), v.begin(), v.end()); };
    for (const auto& m : g.kernel) put(m.data());
    for (const auto& m : g.recurrent) put(m.data());
    for (const auto& b : g.bias) put(b);
    put(g.dense_kernel.data());
    put(g.dense_bias);
    if (w.params.size() != param_count(arch)) throw DimensionError("gate matrices do not match architecture");
    return w;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double apply_activation(OutputActivation a, double x) {
    return a == OutputActivation::tanh ? std::tanh(x) : sigmoid(x);
}

namespace {

// Pre-activations z[g*nc + j] for all four gates.
void gate_preactivations(const WeightView& v, std::size_t ni, std::size_t nc, const double* x, const double* h,
                         double* z) {
    for (std::size_t g = 0; g < 4; ++g) {
        double* zg = z + g * nc;
        std::copy_n(v.bias[g], nc, zg);
        const double* wk = v.kernel[g];
        for (std::size_t r = 0; r < ni; ++r) {
            const double xr = x[r];
            const double* row = wk + r * nc;
            for (std::size_t j = 0; j < nc; ++j) zg[j] += xr * row[j];
        }
        const double* uk = v.recurrent[g];
        for (std::size_t r = 0; r < nc; ++r) {
            const double hr = h[r];
            if (hr == 0.0) continue;
            const double* row = uk + r * nc;
            for (std::size_t j = 0; j < nc; ++j) zg[j] += hr * row[j];
        }
    }
}

void cell_update(std::size_t nc, const double* z, double* h, double* c) {
    for (std::size_t j = 0; j < nc; ++j) {
        const double i = sigmoid(z[j]);
        const double f = sigmoid(z[nc + j]);
        const double g = std::tanh(z[2 * nc + j]);
        const double o = sigmoid(z[3 * nc + j]);
        c[j] = f * c[j] + i * g;
        h[j] = o * std::tanh(c[j]);
    }
}

} // namespace

std::pair<std::vector<double>, std::vector<double>> lstm_step(const ArchitectureSpec& arch, const WeightSet& w,
                                                              std::span<const double> x,
                                                              std::span<const double> h_prev,
                                                              std::span<const double> c_prev) {
    if (w.params.size() != param_count(arch)) throw DimensionError("weight vector length mismatch");
    if (x.size() != arch.n_inputs) throw DimensionError("input width does not match n_inputs");
    if (h_prev.size() != arch.nc || c_prev.size() != arch.nc) {
        throw DimensionError("state width does not match nc");
    }
    const WeightView v(arch, w.params.data());
    std::vector<double> z(4 * arch.nc);
    gate_preactivations(v, arch.n_inputs, arch.nc, x.data(), h_prev.data(), z.data());
    std::vector<double> h(arch.nc);
    std::vector<double> c(c_prev.begin(), c_prev.end());
    cell_update(arch.nc, z.data(), h.data(), c.data());
    return {std::move(h), std::move(c)};
}

void check_compatible(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& ds) {
    arch.validate();
    if (w.params.size() != param_count(arch)) throw DimensionError("weight vector length mismatch");
    if (ds.n_features != arch.n_inputs) {
        throw DimensionError("dataset has " + std::to_string(ds.n_features) + " features, architecture expects " +
                             std::to_string(arch.n_inputs));
    }
    if (ds.n_outputs() != arch.n_outputs) {
        throw DimensionError("dataset has " + std::to_string(ds.n_outputs()) + " targets, architecture expects " +
                             std::to_string(arch.n_outputs));
    }
    if (ds.lb != arch.lb) {
        throw DimensionError("dataset look-back " + std::to_string(ds.lb) + " differs from architecture lb " +
                             std::to_string(arch.lb));
    }
}

Matrix predict(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& ds) {
    check_compatible(arch, w, ds);
    const std::size_t nc = arch.nc, ni = arch.n_inputs, no = arch.n_outputs;
    const WeightView v(arch, w.params.data());
    Matrix out(ds.size(), no);
    std::vector<double> z(4 * nc), h(nc), c(nc);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::fill(h.begin(), h.end(), 0.0);
        std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t s = 0; s < arch.lb; ++s) {
            gate_preactivations(v, ni, nc, ds.step(i, s).data(), h.data(), z.data());
            cell_update(nc, z.data(), h.data(), c.data());
        }
        for (std::size_t k = 0; k < no; ++k) {
            double a = v.dense_bias[k];
            for (std::size_t j = 0; j < nc; ++j) a += h[j] * v.dense_kernel[j * no + k];
            out(i, k) = apply_activation(arch.output_activation, a);
        }
    }
    return out;
}

} // namespace rnnsamp

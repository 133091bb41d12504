#pragma once

// Single-hidden-layer LSTM regressor: an LSTM layer of `nc` cells unrolled over
// `lb` steps, followed by a dense layer and an output activation applied to the
// final hidden state.
//
// Cell equations (no peepholes):
//   i = sigmoid(W_i x + U_i h + b_i)    f = sigmoid(W_f x + U_f h + b_f)
//   g = tanh   (W_c x + U_c h + b_c)    o = sigmoid(W_o x + U_o h + b_o)
//   c' = f*c + i*g                      h' = o*tanh(c')
//
// Flat parameter order: W_i W_f W_c W_o | U_i U_f U_c U_o | b_i b_f b_c b_o | dense kernel | dense bias.
// Kernels are row-major with shape [fan_in x fan_out] (W_g is [n_inputs x nc]).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rnnsamp/matrix.hpp"
#include "rnnsamp/timeseries.hpp"

namespace rnnsamp {

enum class OutputActivation { tanh, sigmoid };

std::string to_string(OutputActivation a);
OutputActivation parse_activation(const std::string& name);

/// Closed range of the output activation.
std::pair<double, double> activation_range(OutputActivation a);

struct ArchitectureSpec {
    std::size_t nc = 1;         // hidden LSTM cells
    std::size_t lb = 1;         // look back
    std::size_t n_inputs = 1;
    std::size_t n_outputs = 1;
    OutputActivation output_activation = OutputActivation::tanh;

    void validate() const;
    bool operator==(const ArchitectureSpec&) const = default;
};

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

struct LayoutSegment {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
    bool operator==(const LayoutSegment&) const = default;
};

/// Ordered, contiguous segment table covering the whole parameter vector.
std::vector<LayoutSegment> weight_layout(const ArchitectureSpec& arch);

/// 4*nc*(n_inputs+nc+1) + nc*n_outputs + n_outputs
std::size_t param_count(const ArchitectureSpec& arch);

struct WeightSet {
    ArchitectureSpec arch;
    std::vector<double> params;

    std::vector<LayoutSegment> layout() const { return weight_layout(arch); }
    bool operator==(const WeightSet&) const = default;
};

/// Every parameter drawn i.i.d. from N(0,1). Parameter j is a pure function of (seed, j).
WeightSet sample_weights(const ArchitectureSpec& arch, std::uint64_t seed);

/// Uniform Glorot kernels, zero biases, forget-gate bias 1. Used as the fresh
/// starting point for gradient training.
WeightSet glorot_weights(const ArchitectureSpec& arch, std::uint64_t seed);

/// Non-owning pointers into a flat parameter (or gradient) vector.
template <typename T>
struct BasicWeightView {
    std::array<T*, 4> kernel{};     // [n_inputs x nc]
    std::array<T*, 4> recurrent{};  // [nc x nc]
    std::array<T*, 4> bias{};       // [nc]
    T* dense_kernel = nullptr;      // [nc x n_outputs]
    T* dense_bias = nullptr;        // [n_outputs]

    BasicWeightView(const ArchitectureSpec& arch, T* base) {
        const std::size_t ni = arch.n_inputs, nc = arch.nc;
        T* p = base;
        for (auto& k : kernel) { k = p; p += ni * nc; }
        for (auto& u : recurrent) { u = p; p += nc * nc; }
        for (auto& b : bias) { b = p; p += nc; }
        dense_kernel = p;
        p += nc * arch.n_outputs;
        dense_bias = p;
    }
};
using WeightView = BasicWeightView<const double>;
using MutableWeightView = BasicWeightView<double>;

/// Structured copy of a weight vector, one matrix per segment.
struct GateParams {
    std::array<Matrix, 4> kernel;
    std::array<Matrix, 4> recurrent;
    std::array<std::vector<double>, 4> bias;
    Matrix dense_kernel;
    std::vector<double> dense_bias;
};

GateParams unflatten(const WeightSet& w);
WeightSet flatten(const ArchitectureSpec& arch, const GateParams& g);

/// One LSTM time step. Throws DimensionError on mismatched sizes.
std::pair<std::vector<double>, std::vector<double>> lstm_step(const ArchitectureSpec& arch, const WeightSet& w,
                                                              std::span<const double> x,
                                                              std::span<const double> h_prev,
                                                              std::span<const double> c_prev);

/// Forward pass over every example, each starting from zero state.
Matrix predict(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& ds);

/// Throws DimensionError unless `w` and `ds` fit `arch`.
void check_compatible(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& ds);

double sigmoid(double x);
double apply_activation(OutputActivation a, double x);

} // namespace rnnsamp

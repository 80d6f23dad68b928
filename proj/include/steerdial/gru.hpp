#pragma once

#include <string>
#include <vector>

#include "steerdial/math.hpp"
#include "steerdial/rng.hpp"

namespace steerdial {

// Named view over one parameter tensor and its gradient buffer. Order of
// these refs fixes the flat layout used by SGD, checkpoints, and the
// finite-difference tests.
struct ParamRef {
    std::string name;
    Matrix* value;
    Matrix* grad;
};

// Gated recurrent unit. Biases are held as single-column matrices so every
// parameter shares one type.
struct GruCell {
    Matrix Wz, Uz, bz;
    Matrix Wr, Ur, br;
    Matrix Wh, Uh, bh;

    GruCell() = default;
    GruCell(Index input_dim, Index hidden_dim);

    Index input_dim() const { return Wz.cols(); }
    Index hidden_dim() const { return Wz.rows(); }

    void init(Rng& rng, Scalar scale);
    void zero();

    struct Step {
        Vector x, h_prev, z, r, rh, hhat;
    };

    // z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
    // hhat = tanh(Wh x + Uh (r .* h) + bh), h' = (1-z) .* h + z .* hhat
    Vector forward(const Vector& x, const Vector& h_prev, Step* step = nullptr) const;

    // Accumulates parameter gradients into grad (same shapes, zeroed by the
    // caller) and adds the input-side gradients onto dx and dh_prev.
    void backward(const Step& step, const Vector& dh, GruCell& grad, Vector& dx, Vector& dh_prev) const;
};

void append_params(std::vector<ParamRef>& out, const std::string& prefix, GruCell& cell, GruCell& grad);

}  // namespace steerdial

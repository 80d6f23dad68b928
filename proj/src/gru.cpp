#include "steerdial/gru.hpp"

namespace steerdial {

GruCell::GruCell(Index input_dim, Index hidden_dim)
    : Wz(Matrix::Zero(hidden_dim, input_dim)), Uz(Matrix::Zero(hidden_dim, hidden_dim)),
      bz(Matrix::Zero(hidden_dim, 1)), Wr(Matrix::Zero(hidden_dim, input_dim)),
      Ur(Matrix::Zero(hidden_dim, hidden_dim)), br(Matrix::Zero(hidden_dim, 1)),
      Wh(Matrix::Zero(hidden_dim, input_dim)), Uh(Matrix::Zero(hidden_dim, hidden_dim)),
      bh(Matrix::Zero(hidden_dim, 1)) {}

void GruCell::init(Rng& rng, Scalar scale) {
    for (Matrix* m : {&Wz, &Uz, &bz, &Wr, &Ur, &br, &Wh, &Uh, &bh}) {
        for (Index j = 0; j < m->cols(); ++j)
            for (Index i = 0; i < m->rows(); ++i) (*m)(i, j) = rng.uniform(-scale, scale);
    }
}

void GruCell::zero() {
    for (Matrix* m : {&Wz, &Uz, &bz, &Wr, &Ur, &br, &Wh, &Uh, &bh}) m->setZero();
}

Vector GruCell::forward(const Vector& x, const Vector& h_prev, Step* step) const {
    Vector z = sigmoid(Wz * x + Uz * h_prev + bz);
    Vector r = sigmoid(Wr * x + Ur * h_prev + br);
    Vector rh = r.cwiseProduct(h_prev);
    Vector hhat = (Wh * x + Uh * rh + bh).array().tanh();
    Vector h = (Vector::Ones(z.size()) - z).cwiseProduct(h_prev) + z.cwiseProduct(hhat);
    if (step) {
        step->x = x;
        step->h_prev = h_prev;
        step->z = z;
        step->r = r;
        step->rh = rh;
        step->hhat = hhat;
    }
    return h;
}

void GruCell::backward(const Step& step, const Vector& dh, GruCell& grad, Vector& dx, Vector& dh_prev) const {
    Vector dz = dh.cwiseProduct(step.hhat - step.h_prev);
    Vector dhhat = dh.cwiseProduct(step.z);
    dh_prev += dh.cwiseProduct(Vector::Ones(dh.size()) - step.z);

    Vector dah = dhhat.cwiseProduct(Vector::Ones(dh.size()) - step.hhat.cwiseProduct(step.hhat));
    grad.Wh.noalias() += dah * step.x.transpose();
    grad.Uh.noalias() += dah * step.rh.transpose();
    grad.bh.noalias() += dah;

    Vector drh = Uh.transpose() * dah;
    Vector dr = drh.cwiseProduct(step.h_prev);
    dh_prev += drh.cwiseProduct(step.r);

    Vector daz = dz.cwiseProduct(step.z.cwiseProduct(Vector::Ones(dh.size()) - step.z));
    grad.Wz.noalias() += daz * step.x.transpose();
    grad.Uz.noalias() += daz * step.h_prev.transpose();
    grad.bz.noalias() += daz;
    dh_prev.noalias() += Uz.transpose() * daz;

    Vector dar = dr.cwiseProduct(step.r.cwiseProduct(Vector::Ones(dh.size()) - step.r));
    grad.Wr.noalias() += dar * step.x.transpose();
    grad.Ur.noalias() += dar * step.h_prev.transpose();
    grad.br.noalias() += dar;
    dh_prev.noalias() += Ur.transpose() * dar;

    dx.noalias() += Wz.transpose() * daz + Wr.transpose() * dar + Wh.transpose() * dah;
}

void append_params(std::vector<ParamRef>& out, const std::string& prefix, GruCell& cell, GruCell& grad) {
    out.push_back({prefix + ".Wz", &cell.Wz, &grad.Wz});
    out.push_back({prefix + ".Uz", &cell.Uz, &grad.Uz});
    out.push_back({prefix + ".bz", &cell.bz, &grad.bz});
    out.push_back({prefix + ".Wr", &cell.Wr, &grad.Wr});
    out.push_back({prefix + ".Ur", &cell.Ur, &grad.Ur});
    out.push_back({prefix + ".br", &cell.br, &grad.br});
    out.push_back({prefix + ".Wh", &cell.Wh, &grad.Wh});
    out.push_back({prefix + ".Uh", &cell.Uh, &grad.Uh});
    out.push_back({prefix + ".bh", &cell.bh, &grad.bh});
}

}  // namespace steerdial

#include "mflq/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "mflq/errors.hpp"

namespace mflq {

namespace {

void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << "ModelParams." << name << ": expected " << rows << "x" << cols << ", got "
           << m.rows() << "x" << m.cols();
        throw DimensionError(os.str());
    }
}

bool is_symmetric(const Eigen::MatrixXd& m) {
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

ValidationCheck check_spd(const Eigen::MatrixXd& m, const std::string& name) {
    ValidationCheck c{name + " > 0", false, ""};
    if (!is_symmetric(m)) {
        c.detail = name + " is not symmetric";
        return c;
    }
    const double lo = min_eigenvalue(m);
    c.passed = lo > kDefinitenessTol;
    std::ostringstream os;
    os << "min eigenvalue " << lo;
    c.detail = os.str();
    return c;
}

ValidationCheck check_psd(const Eigen::MatrixXd& m, const std::string& name) {
    ValidationCheck c{name + " >= 0", false, ""};
    if (!is_symmetric(m)) {
        c.detail = name + " is not symmetric";
        return c;
    }
    const double lo = min_eigenvalue(m);
    c.passed = lo >= -kDefinitenessTol;
    std::ostringstream os;
    os << "min eigenvalue " << lo;
    c.detail = os.str();
    return c;
}

ValidationCheck check_nsd(const Eigen::MatrixXd& m, const std::string& name) {
    ValidationCheck c{name + " <= 0", false, ""};
    if (!is_symmetric(m)) {
        c.detail = name + " is not symmetric";
        return c;
    }
    const double hi = max_eigenvalue(m);
    c.passed = hi <= kDefinitenessTol;
    std::ostringstream os;
    os << "max eigenvalue " << hi;
    c.detail = os.str();
    return c;
}

bool all_finite(const ModelParams& p) {
    return p.A.allFinite() && p.B.allFinite() && p.C.allFinite() && p.f.allFinite() &&
           p.Q.allFinite() && p.R.allFinite() && p.H.allFinite() && p.G.allFinite() &&
           p.Gamma1.allFinite() && p.eta1.allFinite() && p.Gamma0.allFinite() &&
           p.eta0.allFinite() && p.terminal.alpha.allFinite() && p.terminal.c.allFinite() &&
           std::isfinite(p.horizon);
}

ValidationReport finish(ValidationReport rep) {
    rep.passed = true;
    for (const auto& c : rep.checks) rep.passed = rep.passed && c.passed;
    return rep;
}

} // namespace

void check_dimensions(const ModelParams& p) {
    if (p.n < 1) throw DimensionError("ModelParams.n must be >= 1");
    if (p.r < 1) throw DimensionError("ModelParams.r must be >= 1");
    if (p.num_agents < 1) throw DimensionError("ModelParams.N must be >= 1");
    if (!(p.horizon > 0.0)) throw DimensionError("ModelParams.T must be > 0");
    const Eigen::Index n = p.n, r = p.r;
    require_shape(p.A, n, n, "A");
    require_shape(p.B, n, r, "B");
    require_shape(p.C, n, n, "C");
    require_shape(p.f, n, 1, "f");
    require_shape(p.Q, n, n, "Q");
    require_shape(p.R, r, r, "R");
    require_shape(p.H, n, n, "H");
    require_shape(p.G, n, n, "G");
    require_shape(p.Gamma1, n, n, "Gamma1");
    require_shape(p.eta1, n, 1, "eta1");
    require_shape(p.Gamma0, n, n, "Gamma0");
    require_shape(p.eta0, n, 1, "eta0");
    require_shape(p.terminal.alpha, n, 1, "terminal.alpha");
    require_shape(p.terminal.c, n, 1, "terminal.c");
}

ValidationReport validate_game_params(const ModelParams& p) {
    check_dimensions(p);
    ValidationReport rep;
    rep.checks.push_back(check_spd(p.R, "R"));
    rep.checks.push_back(check_psd(p.Q, "Q"));
    rep.checks.push_back(check_psd(p.H, "H"));
    rep.checks.push_back(check_psd(p.G, "G"));
    rep.checks.push_back({"coefficients finite", all_finite(p), ""});
    return finish(rep);
}

ValidationReport validate_social_params(const ModelParams& p) {
    ValidationReport rep = validate_game_params(p);
    const SocialCoefficients sc = social_transforms(p);
    rep.checks.push_back(check_nsd(sc.Q_Gamma, "Q_Gamma"));
    rep.checks.push_back(check_nsd(sc.G_Gamma, "G_Gamma"));
    return finish(rep);
}

SocialCoefficients social_transforms(const ModelParams& p) {
    check_dimensions(p);
    SocialCoefficients sc;
    sc.Q_Gamma = p.Q * p.Gamma1 + p.Gamma1.transpose() * p.Q -
                 p.Gamma1.transpose() * p.Q * p.Gamma1;
    sc.eta1_bar = p.Q * p.eta1 - p.Gamma1.transpose() * p.Q * p.eta1;
    sc.G_Gamma = p.G * p.Gamma0 + p.Gamma0.transpose() * p.G -
                 p.Gamma0.transpose() * p.G * p.Gamma0;
    sc.eta0_bar = p.G * p.eta0 - p.Gamma0.transpose() * p.G * p.eta0;
    return sc;
}

ModelParams reference_params() {
    ModelParams p;
    p.n = 1;
    p.r = 1;
    p.num_agents = 30;
    p.horizon = 1.0;
    auto scalar = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
    p.A = scalar(0.1);
    p.B = scalar(2.0);
    p.C = scalar(1.0);
    p.f = Eigen::VectorXd::Zero(1);
    p.Q = scalar(1.0);
    p.R = scalar(5.0);
    p.H = scalar(1.0);
    p.G = scalar(2.0);
    p.Gamma1 = scalar(0.5);
    p.eta1 = Eigen::VectorXd::Constant(1, 1.0);
    p.Gamma0 = scalar(0.5);
    p.eta0 = Eigen::VectorXd::Constant(1, 1.0);
    p.terminal.alpha = Eigen::VectorXd::Constant(1, 1.0);
    p.terminal.c = Eigen::VectorXd::Zero(1);
    return p;
}

} // namespace mflq

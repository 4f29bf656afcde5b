#include "ena/esn.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <fstream>

namespace ena {

namespace {

void check_dim(Index got, Index want, const char* what)
{
    if (got != want)
        throw Error{ErrorKind::dimension, fmt::format("{}: expected size {}, got {}", what, want, got)};
}

Vector leaky_tanh(double leak, const Vector& x, const Vector& pre)
{
    if (leak == 1.0) return pre.array().tanh().matrix();
    return (1.0 - leak) * x + leak * pre.array().tanh().matrix();
}

Matrix uniform_matrix(Index rows, Index cols, Rng& rng)
{
    std::uniform_real_distribution<double> dist{-1.0, 1.0};
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

}  // namespace

void EsnModel::validate() const
{
    if (!(leak_rate > 0.0 && leak_rate <= 1.0))
        throw Error{ErrorKind::invalid_argument, fmt::format("leak rate {} outside (0, 1]", leak_rate)};
    if (!(noise_std >= 0.0))
        throw Error{ErrorKind::invalid_argument, fmt::format("noise std {} is negative", noise_std)};
    if (reservoir.rows() != reservoir.cols() || reservoir.rows() == 0)
        throw Error{ErrorKind::dimension, "reservoir must be a non-empty square matrix"};
    check_dim(input_weights.rows(), n_r(), "input weight rows");
    check_dim(feedback_weights.rows(), n_r(), "feedback weight rows");
    if (readout) {
        check_dim(readout->cols(), n_r(), "readout columns");
        check_dim(readout->rows(), n_o(), "readout rows");
    }
}

TrainedReservoir trained_reservoir(const EsnModel& model)
{
    if (!model.trained())
        throw Error{ErrorKind::usage, "trained reservoir requires an installed read-out"};
    return {model.reservoir + model.feedback_weights * *model.readout};
}

double spectral_radius(const Matrix& a)
{
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver{a, false};
    if (solver.info() != Eigen::Success)
        throw Error{ErrorKind::solver, "eigenvalue decomposition did not converge"};
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

EsnModel build_random_esn(const EsnBuildParams& params)
{
    if (params.n_r < 1 || params.n_i < 0 || params.n_o < 0)
        throw Error{ErrorKind::invalid_argument, "network sizes must be positive"};
    if (!(params.sparsity >= 0.0 && params.sparsity < 1.0))
        throw Error{ErrorKind::invalid_argument, fmt::format("sparsity {} outside [0, 1)", params.sparsity)};
    if (!(params.spectral_radius > 0.0))
        throw Error{ErrorKind::invalid_argument, "spectral radius must be positive"};

    Rng rng{params.seed};
    std::uniform_real_distribution<double> weight{-1.0, 1.0};
    std::uniform_real_distribution<double> mask{0.0, 1.0};

    EsnModel model;
    model.reservoir.resize(params.n_r, params.n_r);
    for (Index i = 0; i < params.n_r; ++i) {
        for (Index j = 0; j < params.n_r; ++j) {
            double w = weight(rng);
            model.reservoir(i, j) = mask(rng) < params.sparsity ? 0.0 : w;
        }
    }
    double radius = spectral_radius(model.reservoir);
    if (!(radius > 1e-12))
        throw Error{ErrorKind::rebuild_required,
                    fmt::format("raw reservoir has spectral radius {}; draw again with another seed", radius)};
    model.reservoir *= params.spectral_radius / radius;
    model.input_weights = uniform_matrix(params.n_r, params.n_i, rng);
    model.feedback_weights = uniform_matrix(params.n_r, params.n_o, rng);
    model.seed = params.seed;
    model.provenance = fmt::format("random reservoir n_r={} sparsity={} rho={}", params.n_r, params.sparsity,
                                   params.spectral_radius);
    return model;
}

Vector step_open_loop(const EsnModel& model, const Vector& x, const Vector& u, const Vector& y_prev)
{
    return step_open_loop(model, x, u, y_prev, Vector::Zero(model.n_r()));
}

Vector step_open_loop(const EsnModel& model, const Vector& x, const Vector& u, const Vector& y_prev,
                      const Vector& noise)
{
    check_dim(x.size(), model.n_r(), "state");
    check_dim(u.size(), model.n_i(), "input");
    check_dim(y_prev.size(), model.n_o(), "feedback");
    check_dim(noise.size(), model.n_r(), "noise");
    Vector pre = model.reservoir * x + model.input_weights * u + model.feedback_weights * y_prev + noise;
    return leaky_tanh(model.leak_rate, x, pre);
}

Vector step_closed_loop(const EsnModel& model, const Vector& x, const Vector& u)
{
    return step_closed_loop(model, x, u, Vector::Zero(model.n_r()));
}

Vector step_closed_loop(const EsnModel& model, const Vector& x, const Vector& u, const Vector& noise)
{
    const Matrix m = trained_reservoir(model).m;
    check_dim(x.size(), model.n_r(), "state");
    check_dim(u.size(), model.n_i(), "input");
    check_dim(noise.size(), model.n_r(), "noise");
    Vector pre = m * x + model.input_weights * u + noise;
    return leaky_tanh(model.leak_rate, x, pre);
}

Vector autonomous_map(const EsnModel& model, const Vector& x)
{
    return step_closed_loop(model, x, Vector::Zero(model.n_i()));
}

ClosedLoop::ClosedLoop(const EsnModel& model)
    : dim_{model.n_r()}, leak_{model.leak_rate}
{
    model.validate();
    if (!model.trained())
        throw Error{ErrorKind::usage, "closed loop requires an installed read-out"};
    reservoir_ = model.reservoir.sparseView();
    reservoir_.makeCompressed();
    feedback_ = model.feedback_weights;
    readout_ = *model.readout;
    input_ = model.input_weights;
    dense_m_ = model.reservoir + feedback_ * readout_;
}

Vector ClosedLoop::apply_m(const Vector& x) const
{
    return reservoir_ * x + feedback_ * (readout_ * x);
}

Vector ClosedLoop::apply_m_transpose(const Vector& v) const
{
    return reservoir_.transpose() * v + readout_.transpose() * (feedback_.transpose() * v);
}

Vector ClosedLoop::step(const Vector& x, const Vector& u) const
{
    Vector pre = apply_m(x);
    if (u.size() > 0 && !u.isZero(0.0)) pre += input_ * u;
    return leaky_tanh(leak_, x, pre);
}

Vector ClosedLoop::step(const Vector& x, const Vector& u, const Vector& noise) const
{
    Vector pre = apply_m(x) + noise;
    if (u.size() > 0 && !u.isZero(0.0)) pre += input_ * u;
    return leaky_tanh(leak_, x, pre);
}

Vector ClosedLoop::map(const Vector& x) const
{
    return leaky_tanh(leak_, x, apply_m(x));
}

Vector Trajectory::state_before(Index k) const
{
    return k == 0 ? initial_state : Vector(states.row(k - 1).transpose());
}

Trajectory run_closed_loop(const EsnModel& model, const Matrix& inputs, const Matrix& targets,
                           const Vector& initial_state, double noise_std, Rng& rng)
{
    ClosedLoop loop{model};
    check_dim(initial_state.size(), loop.dim(), "initial state");
    check_dim(inputs.cols(), loop.n_i(), "input columns");
    if (targets.rows() > 0) check_dim(targets.rows(), inputs.rows(), "target rows");

    const Index steps = inputs.rows();
    Trajectory traj;
    traj.initial_state = initial_state;
    traj.inputs = inputs;
    traj.targets = targets;
    traj.states.resize(steps, loop.dim());
    traj.outputs.resize(steps, loop.n_o());

    Vector x = initial_state;
    for (Index k = 0; k < steps; ++k) {
        Vector u = inputs.row(k).transpose();
        x = noise_std > 0.0 ? loop.step(x, u, gaussian_vector(loop.dim(), noise_std, rng)) : loop.step(x, u);
        traj.states.row(k) = x.transpose();
        traj.outputs.row(k) = loop.output(x).transpose();
    }
    return traj;
}

Vector prime_state(const EsnModel& model, const Vector& pattern, Index settle_steps)
{
    ClosedLoop loop{model};
    Vector x = Vector::Zero(loop.dim());
    auto settle = [&] {
        for (Index s = 0; s < settle_steps; ++s) x = loop.map(x);
    };
    if (loop.n_i() == pattern.size()) {
        for (Index j = 0; j < pattern.size(); ++j) {
            Vector u = Vector::Zero(loop.n_i());
            u(j) = pattern(j) >= 0.0 ? 1.0 : -1.0;
            x = loop.step(x, u);
            settle();
        }
    } else {
        settle();
    }
    return x;
}

nlohmann::json matrix_to_json(const Matrix& m)
{
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const nlohmann::json& doc)
{
    const Index rows = doc.at("rows").get<Index>();
    const Index cols = doc.at("cols").get<Index>();
    const auto& data = doc.at("data");
    if (static_cast<Index>(data.size()) != rows * cols)
        throw Error{ErrorKind::io, fmt::format("matrix payload has {} values, expected {}x{}", data.size(), rows, cols)};
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = data[static_cast<std::size_t>(i * cols + j)].get<double>();
    return m;
}

nlohmann::json model_to_json(const EsnModel& model)
{
    nlohmann::json doc;
    doc["format"] = "ena-esn-model";
    doc["version"] = 1;
    doc["dims"] = {{"n_r", model.n_r()}, {"n_i", model.n_i()}, {"n_o", model.n_o()}};
    doc["leak_rate"] = model.leak_rate;
    doc["noise_std"] = model.noise_std;
    doc["seed"] = model.seed;
    doc["provenance"] = model.provenance;
    doc["reservoir"] = matrix_to_json(model.reservoir);
    doc["input_weights"] = matrix_to_json(model.input_weights);
    doc["feedback_weights"] = matrix_to_json(model.feedback_weights);
    doc["readout"] = model.readout ? matrix_to_json(*model.readout) : nlohmann::json(nullptr);
    return doc;
}

EsnModel model_from_json(const nlohmann::json& doc)
{
    try {
        if (doc.at("format").get<std::string>() != "ena-esn-model")
            throw Error{ErrorKind::io, "not an ena-esn-model document"};
        EsnModel model;
        model.leak_rate = doc.at("leak_rate").get<double>();
        model.noise_std = doc.at("noise_std").get<double>();
        model.seed = doc.at("seed").get<std::uint64_t>();
        model.provenance = doc.value("provenance", std::string{});
        model.reservoir = matrix_from_json(doc.at("reservoir"));
        model.input_weights = matrix_from_json(doc.at("input_weights"));
        model.feedback_weights = matrix_from_json(doc.at("feedback_weights"));
        if (!doc.at("readout").is_null()) model.readout = matrix_from_json(doc.at("readout"));
        model.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error{ErrorKind::io, fmt::format("malformed model document: {}", e.what())};
    }
}

void save_model(const EsnModel& model, const std::filesystem::path& path)
{
    std::ofstream out{path};
    if (!out) throw Error{ErrorKind::io, fmt::format("cannot write {}", path.string())};
    out << model_to_json(model).dump(1) << '\n';
}

EsnModel load_model(const std::filesystem::path& path)
{
    std::ifstream in{path};
    if (!in) throw Error{ErrorKind::io, fmt::format("cannot read {}", path.string())};
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error{ErrorKind::io, fmt::format("{}: {}", path.string(), e.what())};
    }
    return model_from_json(doc);
}

}  // namespace ena

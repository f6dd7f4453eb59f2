#include "sme/problem.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sme {

static_assert(std::endian::native == std::endian::little,
              "dataset files are little-endian");

QuadraticGaussianProblem::QuadraticGaussianProblem(const ProblemOptions& opts)
    : opts_(opts) {
  const int d = opts.d;
  if (d < 1) throw ValidationError("problem: d >= 1 required");
  if (opts.dataset_size < 1)
    throw ValidationError("problem: dataset_size >= 1 required");

  rng::RngStream hs(opts.h_seed, rng::kSpaceProblem);
  Matrix a(d, d);
  for (int j = 0; j < d; ++j) a.col(j) = gaussian_vector(hs, d);
  h_ = (a.transpose() * a) / static_cast<double>(d) +
       0.1 * Matrix::Identity(d, d);

  if (opts.mode == DataMode::Empirical) {
    const long m = opts.dataset_size;
    data_.resize(d, m);
    rng::RngStream ds(opts.data_seed, rng::kSpaceDataset);
    for (long j = 0; j < m; ++j) data_.col(j) = gaussian_vector(ds, d);
    data_mean_ = data_.rowwise().mean();
    dev_ = -h_ * (data_.colwise() - data_mean_);
    // Covariance of the uniform sampling law over the fixed samples (1/M).
    Matrix centered = data_.colwise() - data_mean_;
    c_hat_ = (centered * centered.transpose()) / static_cast<double>(m);
  } else {
    data_mean_ = Vector::Zero(d);
    c_hat_ = Matrix::Identity(d, d);
  }

  sigma_ = SymMatrix(h_ * c_hat_ * h_);
  sigma_d_ = sigma_.diagonal();
  sigma_sqrt_ = sym_sqrt(sigma_);

  if (opts.m_mode == MMode::GaussianAnalytic || opts.mode == DataMode::Population) {
    // Isserlis: Cov((Sigma^{1/2} xi)^2)_ij = 2 Sigma_ij^2 for Gaussian xi.
    m_ = SymMatrix(2.0 * sigma_.mat().cwiseProduct(sigma_.mat()));
  } else {
    Matrix zhat = dev_.cwiseProduct(dev_);
    Vector zbar = zhat.rowwise().mean();
    Matrix centered = zhat.colwise() - zbar;
    m_ = SymMatrix((centered * centered.transpose()) /
                   static_cast<double>(opts.dataset_size));
  }
  m_sqrt_ = sym_sqrt(m_);
}

Vector QuadraticGaussianProblem::grad_f(const Vector& theta) const {
  return h_ * (theta - data_mean_);
}

Vector QuadraticGaussianProblem::hess_mul(const Vector&, const Vector& v) const {
  return h_ * v;
}

Matrix QuadraticGaussianProblem::hessian(const Vector&) const { return h_; }

Vector QuadraticGaussianProblem::third_contract(const Vector&,
                                                const Matrix&) const {
  return Vector::Zero(dim());
}

SymMatrix QuadraticGaussianProblem::sigma(const Vector&) const { return sigma_; }
Vector QuadraticGaussianProblem::sigma_d(const Vector&) const { return sigma_d_; }
SymMatrix QuadraticGaussianProblem::sigma_sqrt(const Vector&) const {
  return sigma_sqrt_;
}
SymMatrix QuadraticGaussianProblem::sigma_sqrt_inv(const Vector&) const {
  // On demand: degenerate datasets (e.g. a single sample) have singular
  // Sigma, which only matters if a caller actually needs the inverse.
  return sym_sqrt_inv(sigma_);
}
Matrix QuadraticGaussianProblem::grad_sigma_d(const Vector&) const {
  return Matrix::Zero(dim(), dim());
}
SymMatrix QuadraticGaussianProblem::d_sigma_sqrt(const Vector&, int) const {
  return SymMatrix(Matrix::Zero(dim(), dim()));
}
SymMatrix QuadraticGaussianProblem::d2_sigma_sqrt(const Vector&, int, int) const {
  return SymMatrix(Matrix::Zero(dim(), dim()));
}
SymMatrix QuadraticGaussianProblem::m_matrix(const Vector&) const { return m_; }
SymMatrix QuadraticGaussianProblem::m_sqrt(const Vector&) const { return m_sqrt_; }

Vector QuadraticGaussianProblem::sample_deviation(const Vector&, int batch,
                                                  rng::RngStream& stream) const {
  if (batch < 1) throw ValidationError("sample_deviation: batch >= 1");
  const Eigen::Index d = dim();
  Vector out = Vector::Zero(d);
  if (opts_.mode == DataMode::Population) {
    for (int i = 0; i < batch; ++i) out.noalias() -= h_ * gaussian_vector(stream, d);
  } else {
    const std::uint64_t m = static_cast<std::uint64_t>(dev_.cols());
    for (int i = 0; i < batch; ++i)
      out += dev_.col(static_cast<Eigen::Index>(stream.index(m)));
  }
  return out / static_cast<double>(batch);
}

Vector QuadraticGaussianProblem::deviation_full_pass() const {
  if (opts_.mode == DataMode::Population) return Vector::Zero(dim());
  return dev_.rowwise().mean();
}

double QuadraticGaussianProblem::loss(const Vector& theta) const {
  const double trace_term = 0.5 * h_.trace();
  if (opts_.mode == DataMode::Population)
    return 0.5 * theta.dot(h_ * theta);  // E[gamma^T H gamma]/2 cancels Tr(H)/2
  double acc = 0.0;
  for (Eigen::Index j = 0; j < data_.cols(); ++j) {
    const Vector r = theta - data_.col(j);
    acc += 0.5 * r.dot(h_ * r);
  }
  return acc / static_cast<double>(data_.cols()) - trace_term;
}

namespace {
constexpr char kMagic[6] = {'S', 'M', 'E', 'D', 'S', '1'};

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
}  // namespace

void QuadraticGaussianProblem::save_dataset(const std::string& path) const {
  if (opts_.mode == DataMode::Population)
    throw ValidationError("save_dataset: population mode has no dataset");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("save_dataset: cannot open " + path);
  f.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(opts_.d));
  write_pod<std::uint64_t>(f, static_cast<std::uint64_t>(opts_.dataset_size));
  write_pod<std::uint64_t>(f, opts_.data_seed);
  f.write(reinterpret_cast<const char*>(data_.data()),
          static_cast<std::streamsize>(sizeof(double) * data_.size()));
  if (!f) throw Error("save_dataset: write failed for " + path);
}

Matrix QuadraticGaussianProblem::load_dataset(const std::string& path,
                                              ProblemOptions* meta) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("load_dataset: cannot open " + path);
  char magic[6];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("load_dataset: bad magic in " + path);
  const auto d = read_pod<std::uint32_t>(f);
  const auto m = read_pod<std::uint64_t>(f);
  const auto seed = read_pod<std::uint64_t>(f);
  Matrix data(d, static_cast<Eigen::Index>(m));
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(sizeof(double) * data.size()));
  if (!f) throw Error("load_dataset: truncated payload in " + path);
  if (meta) {
    meta->d = static_cast<int>(d);
    meta->dataset_size = static_cast<long>(m);
    meta->data_seed = seed;
  }
  return data;
}

QuadraticGaussianProblem generate_problem(int d, std::uint64_t h_seed,
                                          std::uint64_t data_seed,
                                          long dataset_size) {
  ProblemOptions o;
  o.d = d;
  o.h_seed = h_seed;
  o.data_seed = data_seed;
  o.dataset_size = dataset_size;
  return QuadraticGaussianProblem(o);
}

}  // namespace sme

#include "ringtdvp/state.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <fstream>
#include <random>
#include <sstream>

namespace ringtdvp {

Mat derive_Q(const Mat& R, const Mat& K, double herm_tol) {
  if (R.rows() != K.rows() || R.cols() != K.cols())
    throw dimension_error("derive_Q: R/K dimension mismatch");
  if ((K - K.adjoint()).norm() > herm_tol * std::max(1.0, K.norm()))
    throw std::invalid_argument("derive_Q: K is not hermitian");
  return -0.5 * (R.adjoint() * R) - I_unit * K;
}

namespace {

Mat random_gaussian(int D, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Mat m(D, D);
  for (int j = 0; j < D; ++j)
    for (int i = 0; i < D; ++i) m(i, j) = cxd(gauss(rng), gauss(rng));
  return m;
}

}  // namespace

CmpsState make_state(int D, double L, InitMode mode, std::uint64_t seed,
                     const CmpsState* warm_from) {
  if (D < 1) throw std::invalid_argument("make_state: D must be >= 1");
  if (!(L > 0)) throw std::invalid_argument("make_state: L must be > 0");
  CmpsState s;
  s.D = D;
  s.L = L;
  std::mt19937_64 rng(seed);
  if (mode == InitMode::Random) {
    s.R = random_gaussian(D, rng) / std::sqrt(static_cast<double>(D));
    Mat A = random_gaussian(D, rng);
    s.K = 0.5 * (A + A.adjoint());
    s.B = Mat::Identity(D, D) + 0.01 * random_gaussian(D, rng);
    return s;
  }
  if (!warm_from) throw std::invalid_argument("make_state: warm start needs a source state");
  const int d0 = warm_from->D;
  if (d0 > D) throw std::invalid_argument("make_state: warm start cannot shrink D");
  s.R = Mat::Zero(D, D);
  s.K = Mat::Zero(D, D);
  s.B = Mat::Zero(D, D);
  s.R.topLeftCorner(d0, d0) = warm_from->R;
  s.K.topLeftCorner(d0, d0) = warm_from->K;
  s.B.topLeftCorner(d0, d0) = warm_from->B;
  if (D > d0) {
    const double eps = 1e-3;
    Mat nR = random_gaussian(D, rng), nK = random_gaussian(D, rng), nB = random_gaussian(D, rng);
    nR.topLeftCorner(d0, d0).setZero();
    nK.topLeftCorner(d0, d0).setZero();
    nB.topLeftCorner(d0, d0).setZero();
    s.R += eps * nR;
    s.K += eps * 0.5 * (nK + nK.adjoint());
    s.B += eps * nB;
    // keep the identity baseline on the new diagonal block of B
    for (int i = d0; i < D; ++i) s.B(i, i) += 1.0;
  }
  s.K = 0.5 * (s.K + s.K.adjoint());
  return s;
}

GaugeTriple gauge_transform(const CmpsState& s, const Mat& g) {
  Eigen::PartialPivLU<Mat> lu(g);
  Mat ginv = lu.inverse();
  double cond = g.norm() * ginv.norm();
  if (!std::isfinite(cond) || cond > 1e14)
    throw std::invalid_argument("gauge_transform: g is (numerically) singular");
  GaugeTriple t;
  t.Q = g * s.Q() * ginv;
  t.R = g * s.R * ginv;
  t.B = g * s.B * ginv;
  t.cond_g = cond;
  return t;
}

namespace {

constexpr int kSchemaVersion = 1;

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      rows.push_back({m(i, j).real(), m(i, j).imag()});
  return rows;
}

Mat mat_from_json(const nlohmann::json& j, int D) {
  if (!j.is_array() || static_cast<int>(j.size()) != D * D)
    throw checkpoint_error("checkpoint: matrix payload has wrong size");
  Mat m(D, D);
  int k = 0;
  for (int i = 0; i < D; ++i)
    for (int jj = 0; jj < D; ++jj, ++k)
      m(i, jj) = cxd(j[k][0].get<double>(), j[k][1].get<double>());
  return m;
}

std::uint32_t payload_crc(const nlohmann::json& payload) {
  const std::string buf = payload.dump();
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
}

}  // namespace

void save_state(const CmpsState& s, const std::string& path) {
  nlohmann::json payload;
  payload["D"] = s.D;
  payload["L"] = s.L;
  payload["R"] = mat_to_json(s.R);
  payload["K"] = mat_to_json(s.K);
  payload["B"] = mat_to_json(s.B);
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["payload"] = payload;
  doc["crc32"] = payload_crc(payload);
  std::ofstream out(path);
  if (!out) throw checkpoint_error("save_state: cannot open " + path);
  out << doc.dump(1) << "\n";
  if (!out) throw checkpoint_error("save_state: write failed for " + path);
}

CmpsState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw checkpoint_error("load_state: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw checkpoint_error(std::string("load_state: malformed JSON (") + e.what() + ")");
  }
  if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != kSchemaVersion)
    throw checkpoint_error("load_state: unsupported schema version");
  if (!doc.contains("payload") || !doc.contains("crc32"))
    throw checkpoint_error("load_state: missing payload or checksum");
  const auto& payload = doc["payload"];
  if (payload_crc(payload) != doc["crc32"].get<std::uint32_t>())
    throw checkpoint_error("load_state: checksum mismatch (corrupted file)");
  CmpsState s;
  s.D = payload["D"].get<int>();
  s.L = payload["L"].get<double>();
  if (s.D < 1 || !(s.L > 0)) throw checkpoint_error("load_state: invalid dimensions");
  s.R = mat_from_json(payload["R"], s.D);
  s.K = mat_from_json(payload["K"], s.D);
  s.B = mat_from_json(payload["B"], s.D);
  return s;
}

}  // namespace ringtdvp

#include "ctrack/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include "ctrack/errors.hpp"

namespace ctrack {
namespace {

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
  throw ValidationError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& token, const std::string& source, int line) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(source, line, "invalid number '" + token + "'");
  }
  return v;
}

int parse_int(const std::string& token, const std::string& source, int line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(source, line, "invalid integer '" + token + "'");
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(s);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

Pose checked_pose(const Vector3d& t, const Eigen::Vector4d& q, const std::string& source, int line) {
  try {
    return pose_from_quaternion(t, q);
  } catch (const ValidationError& e) {
    fail(source, line, e.what());
  }
}

void append_pose(std::string& out, const Pose& pose) {
  const Eigen::Vector4d q = quaternion_from_rotation(pose.rotation());
  for (int i = 0; i < 3; ++i) out += " " + format_double(pose.translation()(i));
  for (int i = 0; i < 4; ++i) out += " " + format_double(q(i));
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

// Record lines of a trajectory-style file; fills the order if an "# order" line is present.
std::vector<std::pair<int, StampedPose>> parse_records(std::istream& in, const std::string& source,
                                                       int* order) {
  std::vector<std::pair<int, StampedPose>> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const auto tok = split_ws(s.substr(1));
      if (order && tok.size() == 2 && tok[0] == "order") *order = parse_int(tok[1], source, line);
      continue;
    }
    const auto tok = split_ws(s);
    if (tok.size() != 8) {
      fail(source, line, "expected 8 fields 'timestamp tx ty tz qx qy qz qw', got " +
                             std::to_string(tok.size()));
    }
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = parse_double(tok[i], source, line);
    StampedPose sp;
    sp.timestamp = v[0];
    sp.pose = checked_pose(Vector3d(v[1], v[2], v[3]), Eigen::Vector4d(v[4], v[5], v[6], v[7]),
                           source, line);
    if (!out.empty() && !(sp.timestamp > out.back().second.timestamp)) {
      fail(source, line, "timestamps must be strictly increasing");
    }
    out.emplace_back(line, sp);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Pose pose_from_quaternion(const Vector3d& t, const Eigen::Vector4d& q_xyzw) {
  const double n = q_xyzw.norm();
  if (!(std::abs(n - 1.0) <= 1e-6)) {
    throw ValidationError("quaternion norm " + std::to_string(n) + " is not within 1e-6 of 1");
  }
  const Eigen::Quaterniond q(q_xyzw(3), q_xyzw(0), q_xyzw(1), q_xyzw(2));
  return Pose(q.normalized().toRotationMatrix(), t);
}

Eigen::Vector4d quaternion_from_rotation(const Matrix3d& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return Eigen::Vector4d(q.x(), q.y(), q.z(), q.w());
}

std::vector<StampedPose> parse_trajectory(std::istream& in, const std::string& source) {
  std::vector<StampedPose> out;
  for (auto& [line, sp] : parse_records(in, source, nullptr)) out.push_back(sp);
  return out;
}

std::vector<StampedPose> read_trajectory(const std::string& path) {
  auto in = open_input(path);
  return parse_trajectory(in, path);
}

std::string format_trajectory(const std::vector<StampedPose>& poses, const std::string& header) {
  std::string out;
  if (!header.empty()) out += "# " + header + "\n";
  out += "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& p : poses) {
    out += format_double(p.timestamp);
    append_pose(out, p.pose);
    out += "\n";
  }
  return out;
}

SplineTrajectory parse_control_points(std::istream& in, const std::string& source) {
  int order = 4;
  const auto records = parse_records(in, source, &order);
  std::vector<double> knots;
  std::vector<Pose> cps;
  for (const auto& [line, sp] : records) {
    knots.push_back(sp.timestamp);
    cps.push_back(sp.pose);
  }
  try {
    return SplineTrajectory(order, std::move(knots), std::move(cps));
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

SplineTrajectory read_control_points(const std::string& path) {
  auto in = open_input(path);
  return parse_control_points(in, path);
}

std::string format_control_points(const SplineTrajectory& traj) {
  std::string out = "# order " + std::to_string(traj.order()) + "\n";
  out += "# knot tx ty tz qx qy qz qw\n";
  for (int i = 0; i < traj.size(); ++i) {
    out += format_double(traj.knots()[i]);
    append_pose(out, traj.control_point(i));
    out += "\n";
  }
  return out;
}

std::vector<Observation> parse_observations(std::istream& in, const std::string& source) {
  static const std::vector<std::string> kHeader = {"timestamp", "point_id", "pcx", "pcy",
                                                   "pcz",       "tx",       "ty",  "tz",
                                                   "qx",        "qy",       "qz",  "qw"};
  std::vector<Observation> out;
  std::map<double, std::pair<int, Pose>> cameras;  // first line and pose per timestamp
  std::string raw;
  int line = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    const auto f = split_csv(s);
    if (!header_seen) {
      if (f != kHeader) fail(source, line, "expected header 'timestamp,point_id,pcx,...,qw'");
      header_seen = true;
      continue;
    }
    if (f.size() != kHeader.size()) {
      fail(source, line, "expected 12 fields, got " + std::to_string(f.size()));
    }
    Observation o;
    o.timestamp = parse_double(f[0], source, line);
    o.point_id = parse_int(f[1], source, line);
    double v[10];
    for (int i = 0; i < 10; ++i) v[i] = parse_double(f[i + 2], source, line);
    o.p_c = Vector3d(v[0], v[1], v[2]);
    o.camera_pose = checked_pose(Vector3d(v[3], v[4], v[5]), Eigen::Vector4d(v[6], v[7], v[8], v[9]),
                                 source, line);
    const auto [it, inserted] = cameras.emplace(o.timestamp, std::make_pair(line, o.camera_pose));
    if (!inserted && !(it->second.second == o.camera_pose)) {
      fail(source, line, "camera pose differs from line " + std::to_string(it->second.first) +
                             " for the same timestamp");
    }
    out.push_back(o);
  }
  if (!header_seen) throw ValidationError(source + ": missing observation header");
  return out;
}

std::vector<Observation> read_observations(const std::string& path) {
  auto in = open_input(path);
  return parse_observations(in, path);
}

std::string format_observations(const std::vector<Observation>& observations) {
  std::string out = "timestamp,point_id,pcx,pcy,pcz,tx,ty,tz,qx,qy,qz,qw\n";
  for (const auto& o : observations) {
    out += format_double(o.timestamp) + "," + std::to_string(o.point_id);
    for (int i = 0; i < 3; ++i) out += "," + format_double(o.p_c(i));
    const Eigen::Vector4d q = quaternion_from_rotation(o.camera_pose.rotation());
    for (int i = 0; i < 3; ++i) out += "," + format_double(o.camera_pose.translation()(i));
    for (int i = 0; i < 4; ++i) out += "," + format_double(q(i));
    out += "\n";
  }
  return out;
}

std::string format_object_points(const std::map<int, Vector3d>& points) {
  std::string out = "point_id,x,y,z\n";
  for (const auto& [id, p] : points) {
    out += std::to_string(id);
    for (int i = 0; i < 3; ++i) out += "," + format_double(p(i));
    out += "\n";
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ValidationError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot move '" + tmp.string() + "' to '" + path + "': " + ec.message());
  }
}

}  // namespace ctrack

#include "reachkit/cloud_io.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace reachkit {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_row(const std::string& line, std::size_t lineno) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    field = trim(field);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE)
      throw InvalidInput("line " + std::to_string(lineno) + ": cannot parse '" + field + "'");
    row.push_back(v);
  }
  return row;
}

}  // namespace

PointCloud read_cloud(std::istream& in, int expected_dim) {
  std::string line;
  std::size_t lineno = 0;
  int dim = 0;
  while (dim == 0 && std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("# dim=", 0) != 0) throw InvalidInput("cloud file must start with '# dim=D'");
    dim = std::atoi(line.c_str() + 6);
  }
  require(dim >= 2, "cloud header declares an invalid dimension");
  require(expected_dim <= 0 || expected_dim == dim, "cloud dimension does not match the expected one");

  std::vector<double> flat;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto row = parse_row(line, lineno);
    if (static_cast<int>(row.size()) != dim)
      throw InvalidInput("line " + std::to_string(lineno) + ": expected " + std::to_string(dim) + " coordinates");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  const auto n = static_cast<Eigen::Index>(flat.size() / static_cast<std::size_t>(dim));
  return PointCloud(Eigen::Map<Eigen::MatrixXd>(flat.data(), dim, n), true);
}

PointCloud read_cloud_file(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_cloud(in, expected_dim);
}

void write_cloud(std::ostream& out, const PointCloud& cloud) {
  out << "# dim=" << cloud.dim() << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < cloud.dim(); ++c) out << (c ? "," : "") << cloud[i](c);
    out << '\n';
  }
}

void write_cloud_file(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  write_cloud(out, cloud);
}

Eigen::MatrixXd read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(parse_row(line, lineno));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) == n, "distance table must be square");
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

}  // namespace reachkit

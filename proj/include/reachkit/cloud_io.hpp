#pragma once

#include <iosfwd>
#include <string>

#include "reachkit/core_geometry.hpp"

namespace reachkit {

// Point cloud CSV: a "# dim=D" line, then one comma-separated point per line.
// Blank lines and further '#' lines are ignored.

PointCloud read_cloud(std::istream& in, int expected_dim = 0);
PointCloud read_cloud_file(const std::string& path, int expected_dim = 0);

void write_cloud(std::ostream& out, const PointCloud& cloud);
void write_cloud_file(const std::string& path, const PointCloud& cloud);

/// Square distance table, one row per line, "inf" for +infinity.
Eigen::MatrixXd read_table_file(const std::string& path);

}  // namespace reachkit

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace srvfnet {

/// Numeric CSV, one function (or record) per row. All rows must share one
/// width. A non-empty header vector writes a header line; reading with
/// has_header skips the first line (returned via header_out when given).
Eigen::MatrixXd read_csv(const std::string& path, bool has_header = false,
                         std::vector<std::string>* header_out = nullptr);

void write_csv(const std::string& path, const Eigen::MatrixXd& rows,
               const std::vector<std::string>& header = {});

}  // namespace srvfnet

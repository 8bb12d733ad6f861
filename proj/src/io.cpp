#include "rdm/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rdm {

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trajectory_csv(const TrajectoryRecord& record) {
  std::ostringstream out;
  out << "step,loss,erank_online,erank_target,alignment";
  for (Eigen::Index i = 1; i <= record.top_count; ++i)
    out << ",ev_online_" << i;
  for (Eigen::Index i = 1; i <= record.top_count; ++i)
    out << ",ev_target_" << i;
  out << "\n";

  for (const auto& pt : record.points) {
    out << pt.step << ',' << format_float(pt.loss) << ','
        << format_float(pt.erank_online) << ','
        << format_float(pt.erank_target) << ','
        << format_float(pt.alignment);
    for (Eigen::Index i = 0; i < record.top_count; ++i)
      out << ',' << format_float(i < pt.ev_online.size() ? pt.ev_online[i] : 0.0);
    for (Eigen::Index i = 0; i < record.top_count; ++i)
      out << ',' << format_float(i < pt.ev_target.size() ? pt.ev_target[i] : 0.0);
    out << "\n";
  }
  return out.str();
}

std::string spectrum_csv(const Spectrum& spectrum) {
  std::ostringstream out;
  out << "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < spectrum.size(); ++i)
    out << i << ',' << format_float(spectrum[i]) << "\n";
  return out.str();
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_float(m(i, j));
    }
    out << "\n";
  }
  return out.str();
}

std::string filter_pairs_csv(
    const std::vector<std::pair<double, double>>& pairs) {
  std::ostringstream out;
  out << "index,eigenvalue,filter_value\n";
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out << i << ',' << format_float(pairs[i].first) << ','
        << format_float(pairs[i].second) << "\n";
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw InvalidInput("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace rdm

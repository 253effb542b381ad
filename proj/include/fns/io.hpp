#ifndef FNS_IO_HPP
#define FNS_IO_HPP

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "fns/common.hpp"
#include "fns/field.hpp"

namespace fns {

/** Text rows with '#'-prefixed provenance header, numbers printed %.17g. */
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header_comments,
            const std::string& columns) {
    f_ = std::fopen(path.c_str(), "w");
    if (!f_) throw config_error("cannot open output file: " + path);
    for (const auto& c : header_comments) std::fprintf(f_, "# %s\n", c.c_str());
    std::fprintf(f_, "%s\n", columns.c_str());
  }
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void field(double v) {
    sep();
    std::fprintf(f_, "%.17g", v);
  }
  void field(int v) {
    sep();
    std::fprintf(f_, "%d", v);
  }
  void field(const std::string& v) {
    sep();
    std::fprintf(f_, "%s", v.c_str());
  }
  void end_row() {
    std::fprintf(f_, "\n");
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) std::fprintf(f_, ",");
    first_ = false;
  }
  std::FILE* f_ = nullptr;
  bool first_ = true;
};

namespace detail {

inline void write_complex_rows(std::FILE* f, const std::vector<ComplexField>& rows) {
  for (const auto& row : rows)
    for (const complex& z : row) {
      double re = z.real(), im = z.imag();
      std::fwrite(&re, sizeof(double), 1, f);
      std::fwrite(&im, sizeof(double), 1, f);
    }
}

}  // namespace detail

/** Flat binary field dump: row-major time-by-space, each sample as two
 *  little-endian float64 (re, im). A text sidecar <path>.hdr records the
 *  dimensions and the resolved configuration. */
inline void write_field_binary(const std::string& path, const std::vector<ComplexField>& rows,
                               int cols, const std::vector<std::string>& header_comments) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw config_error("cannot open output file: " + path);
  detail::write_complex_rows(f, rows);
  std::fclose(f);

  std::FILE* h = std::fopen((path + ".hdr").c_str(), "w");
  if (!h) throw config_error("cannot open output file: " + path + ".hdr");
  std::fprintf(h, "rows %zu\ncols %d\nlayout float64 little-endian interleaved re,im; "
                  "row = one time level\n",
               rows.size(), cols);
  for (const auto& c : header_comments) std::fprintf(h, "# %s\n", c.c_str());
  std::fclose(h);
}

inline void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw config_error("cannot create output directory: " + dir);
}

}  // namespace fns

#endif

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "saser/errors.hpp"
#include "saser/units.hpp"

namespace saser::fit {

enum class YKind { complex_s21, magnitude_squared, psd };

/// Sampled curve. Complex data lives in `yc`, real data in `y`.
struct CurveData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<Complex> yc;
  YKind kind = YKind::psd;
  std::string x_unit = "MHz";

  std::size_t size() const noexcept { return x.size(); }
  bool is_complex() const noexcept { return kind == YKind::complex_s21; }

  /// Throws unless x is strictly increasing and every value is finite.
  void validate(std::size_t min_points = 3) const {
    const std::size_t ny = is_complex() ? yc.size() : y.size();
    if (ny != x.size()) throw ValidationError("curve: x and y lengths differ");
    if (x.size() < min_points)
      throw ValidationError("curve: need at least " + std::to_string(min_points) + " points, got " +
                            std::to_string(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i])) throw ValidationError("curve: non-finite x at row " + std::to_string(i));
      if (i > 0 && !(x[i] > x[i - 1])) throw ValidationError("curve: x is not strictly increasing at row " + std::to_string(i));
      const bool finite = is_complex() ? std::isfinite(yc[i].real()) && std::isfinite(yc[i].imag()) : std::isfinite(y[i]);
      if (!finite) throw ValidationError("curve: non-finite y at row " + std::to_string(i));
    }
  }

  static CurveData real(std::vector<double> x, std::vector<double> y, YKind kind = YKind::psd) {
    CurveData c;
    c.x = std::move(x);
    c.y = std::move(y);
    c.kind = kind;
    return c;
  }

  static CurveData complex(std::vector<double> x, std::vector<Complex> y) {
    CurveData c;
    c.x = std::move(x);
    c.yc = std::move(y);
    c.kind = YKind::complex_s21;
    return c;
  }
};

/// Full width at half maximum above a background taken as the median of the
/// outer 10% of samples. Crossings are linearly interpolated.
inline double fwhm(const CurveData& curve) {
  if (curve.is_complex()) throw ValidationError("fwhm: needs real-valued data");
  curve.validate(5);
  const auto& x = curve.x;
  const auto& y = curve.y;
  const std::size_t n = y.size();
  const std::size_t edge = std::max<std::size_t>(1, (n + 19) / 20);
  std::vector<double> outer(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(edge));
  outer.insert(outer.end(), y.end() - static_cast<std::ptrdiff_t>(edge), y.end());
  std::sort(outer.begin(), outer.end());
  const std::size_t m = outer.size();
  const double background = m % 2 ? outer[m / 2] : 0.5 * (outer[m / 2 - 1] + outer[m / 2]);

  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  if (!(y[peak] > background)) throw DomainError("fwhm: no peak above the background");
  const double half = background + 0.5 * (y[peak] - background);

  auto cross = [&](std::size_t a, std::size_t b) {  // y[a] >= half > y[b]
    return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
  };
  std::size_t i = peak;
  while (i > 0 && y[i - 1] >= half) --i;
  if (i == 0) throw DomainError("fwhm: open peak, no half-maximum crossing on the low side");
  const double left = cross(i, i - 1);
  std::size_t j = peak;
  while (j + 1 < n && y[j + 1] >= half) ++j;
  if (j + 1 == n) throw DomainError("fwhm: open peak, no half-maximum crossing on the high side");
  const double right = cross(j, j + 1);
  return right - left;
}

/// Reads `x,re,im` or `x,value` CSV with a one-line header. The unit of x is
/// taken from the first header cell (e.g. `f_MHz`, `freq [GHz]`). A two-column
/// file whose value column mentions "psd" is a PSD, otherwise |S21|².
inline CurveData read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");

  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      out.push_back(cell);
    }
    return out;
  };
  const auto header = split(line);
  if (header.size() != 2 && header.size() != 3)
    throw ValidationError("'" + path + "': expected 2 or 3 columns, header has " + std::to_string(header.size()));

  CurveData c;
  c.x_unit = "MHz";
  for (const char* unit : {"GHz", "MHz", "kHz", "Hz"})
    if (header[0].find(unit) != std::string::npos) {
      c.x_unit = unit;
      break;
    }
  if (header.size() == 3) {
    c.kind = YKind::complex_s21;
  } else {
    std::string lower = header[1];
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    c.kind = lower.find("psd") != std::string::npos ? YKind::psd : YKind::magnitude_squared;
  }

  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ValidationError("'" + path + "' line " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " columns");
    try {
      c.x.push_back(std::stod(cells[0]));
      if (c.is_complex())
        c.yc.emplace_back(std::stod(cells[1]), std::stod(cells[2]));
      else
        c.y.push_back(std::stod(cells[1]));
    } catch (const std::logic_error&) {
      throw ValidationError("'" + path + "' line " + std::to_string(row) + ": not a number");
    }
  }
  c.validate(1);
  return c;
}

}  // namespace saser::fit

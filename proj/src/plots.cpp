#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fmhsdm/error.hpp"
#include "fmhsdm/harness.hpp"

namespace fmh {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

struct Series {
  std::vector<double> iters;
  std::vector<double> values;
};

// metric -> (solver order, solver -> series)
struct Table {
  std::vector<std::string> metric_order;
  std::map<std::string, std::vector<std::string>> solver_order;
  std::map<std::string, std::map<std::string, Series>> data;
};

bool skip_metric(const std::string& metric) { return metric == "infeasible" || metric == "fixed_point_residual"; }

[[noreturn]] void malformed(const std::string& path, std::size_t line, const std::string& why) {
  fail(ErrorCode::kInvalidArgument, path + ":" + std::to_string(line) + ": " + why);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_value(const std::string& s, bool& ok) {
  ok = true;
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  ok = res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
  return v;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kInvalidArgument, path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "solver,iter,metric,mean") malformed(path, 1, "expected header 'solver,iter,metric,mean'");

  Table t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 4) malformed(path, lineno, "expected 4 fields");
    if (cells[0].empty() || cells[2].empty()) malformed(path, lineno, "empty solver or metric");
    long long iter = 0;
    const auto r = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), iter);
    if (r.ec != std::errc() || r.ptr != cells[1].data() + cells[1].size() || iter < 0)
      malformed(path, lineno, "iteration is not a nonnegative integer");
    bool ok = false;
    const double v = parse_value(cells[3], ok);
    if (!ok) malformed(path, lineno, "mean is not a number");

    const std::string& solver = cells[0];
    const std::string& metric = cells[2];
    if (!t.data.count(metric)) t.metric_order.push_back(metric);
    auto& per_solver = t.data[metric];
    if (!per_solver.count(solver)) t.solver_order[metric].push_back(solver);
    Series& s = per_solver[solver];
    if (!s.iters.empty() && static_cast<double>(iter) <= s.iters.back())
      malformed(path, lineno, "iterations must increase within a series");
    s.iters.push_back(static_cast<double>(iter));
    s.values.push_back(v);
  }
  require(!t.data.empty(), ErrorCode::kInvalidArgument, path + " contains no solver rows");
  return t;
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '&')
      out += "&amp;";
    else
      out += c;
  }
  return out;
}

std::string render_svg(const std::string& metric, const std::vector<std::string>& solvers,
                       const std::map<std::string, Series>& data) {
  constexpr double W = 800, H = 500, left = 80, right = 170, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
  for (const auto& [name, s] : data) {
    for (std::size_t i = 0; i < s.iters.size(); ++i) {
      xmin = std::min(xmin, s.iters[i]);
      xmax = std::max(xmax, s.iters[i]);
      const double v = s.values[i];
      if (std::isfinite(v) && v > 0.0) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  double lo = 0.0, hi = 1.0;
  if (ymin <= ymax) {
    lo = std::floor(std::log10(ymin));
    hi = std::ceil(std::log10(ymax));
    if (hi <= lo) hi = lo + 1.0;
  }
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (hi - std::log10(y)) / (hi - lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"16\">" << escape(metric) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int decades = static_cast<int>(hi - lo);
  const int step = std::max(1, decades / 10);
  for (int k = 0; k <= decades; k += step) {
    const double e = lo + k;
    const double y = sy(std::pow(10.0, e));
    o << "<line x1=\"" << left << "\" y1=\"" << num(y) << "\" x2=\"" << left + pw << "\" y2=\"" << num(y)
      << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << num(y + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e" << static_cast<int>(e)
      << "</text>\n";
  }
  const double xstep = std::max(1.0, std::ceil((xmax - xmin) / 5.0));
  for (double xv = xmin; xv <= xmax + 1e-9; xv += xstep) {
    const double x = sx(xv);
    o << "<line x1=\"" << num(x) << "\" y1=\"" << top + ph << "\" x2=\"" << num(x) << "\" y2=\"" << top + ph + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(x) << "\" y=\"" << top + ph + 20
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << std::llround(xv) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << H - 15
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">iteration n</text>\n";

  for (std::size_t si = 0; si < solvers.size(); ++si) {
    const Series& s = data.at(solvers[si]);
    const char* color = kPalette[si % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < s.iters.size(); ++i) {
      const double v = s.values[i];
      if (!(std::isfinite(v) && v > 0.0)) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += num(sx(s.iters[i])) + ',' + num(sy(v));
    }
    flush();
    const double ly = top + 16 + 20.0 * static_cast<double>(si);
    o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << num(ly) << "\" x2=\"" << left + pw + 36 << "\" y2=\""
      << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 42 << "\" y=\"" << num(ly + 4)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(solvers[si]) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render_gnuplot(const std::string& metric, const std::vector<std::string>& solvers,
                           const std::map<std::string, Series>& data) {
  std::ostringstream o;
  o << "set terminal svg size 800,500\n";
  o << "set output '" << metric << "_gnuplot.svg'\n";
  o << "set title '" << metric << "'\n";
  o << "set xlabel 'iteration n'\n";
  o << "set logscale y\n";
  o << "set format y '1e%T'\n";
  o << "set key outside right\n";
  for (std::size_t si = 0; si < solvers.size(); ++si) {
    const Series& s = data.at(solvers[si]);
    o << "$s" << si << " << EOD\n";
    for (std::size_t i = 0; i < s.iters.size(); ++i) {
      const double v = s.values[i];
      if (std::isfinite(v) && v > 0.0) o << static_cast<long long>(s.iters[i]) << ' ' << format_double(v) << '\n';
    }
    o << "EOD\n";
  }
  o << "plot ";
  for (std::size_t si = 0; si < solvers.size(); ++si) {
    if (si) o << ", \\\n     ";
    o << "$s" << si << " using 1:2 with lines title '" << solvers[si] << "'";
  }
  o << '\n';
  return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace

std::vector<std::string> emit_plots(const std::string& averaged_csv, const std::string& out_dir) {
  const Table t = read_table(averaged_csv);
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create " + dir.string());

  std::vector<std::string> plotted;
  for (const auto& metric : t.metric_order) {
    if (skip_metric(metric)) continue;
    const auto& solvers = t.solver_order.at(metric);
    const auto& data = t.data.at(metric);
    write_text(dir / (metric + ".svg"), render_svg(metric, solvers, data));
    write_text(dir / (metric + ".gp"), render_gnuplot(metric, solvers, data));
    plotted.push_back(metric);
  }
  return plotted;
}

}  // namespace fmh

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "chaoslab/error.hpp"
#include "chaoslab/experiment.hpp"

namespace chaoslab {

namespace {

namespace fs = std::filesystem;

struct Series {
  std::vector<double> x, y, se;
};

double json_number(const nlohmann::json& v) {
  return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

void append(Series& s, double x, const nlohmann::json& estimate) {
  if (!estimate.is_object()) return;
  const double y = json_number(estimate.value("value", nlohmann::json()));
  const double se = json_number(estimate.value("se", nlohmann::json()));
  if (!std::isfinite(x) || !std::isfinite(y)) return;
  s.x.push_back(x);
  s.y.push_back(y);
  s.se.push_back(std::isfinite(se) ? se : 0.0);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

/// Line with a +-3 s.e. band. Log x axis when every x is positive and the
/// range spans more than a decade.
std::string render(const Series& s, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  const double xmin_raw = *std::min_element(s.x.begin(), s.x.end());
  const double xmax_raw = *std::max_element(s.x.begin(), s.x.end());
  const bool logx = xmin_raw > 0.0 && xmax_raw / xmin_raw > 10.0;
  auto tx = [&](double x) { return logx ? std::log10(x) : x; };
  double x0 = tx(xmin_raw), x1 = tx(xmax_raw);
  if (x1 == x0) x1 = x0 + 1.0;
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    y0 = std::min(y0, s.y[i] - 3.0 * s.se[i]);
    y1 = std::max(y1, s.y[i] + 3.0 * s.se[i]);
  }
  if (y1 == y0) {
    y0 -= 1.0;
    y1 += 1.0;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double xv = logx ? std::pow(10.0, fx) : fx;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(xlabel)
     << (logx ? " (log scale)" : "") << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">"
     << escape(ylabel) << "</text>\n";

  os << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i] + 3.0 * s.se[i]) << ' ';
  for (std::size_t i = s.x.size(); i-- > 0;) os << px(s.x[i]) << ',' << py(s.y[i] - 3.0 * s.se[i]) << ' ';
  os << "\"/>\n<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
  os << "\"/>\n";
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2.5\" fill=\"#08519c\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string file_stem(std::string s) {
  for (char& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') ch = '_';
  }
  return s;
}

using Plots = std::vector<std::pair<std::string, std::string>>;  // file name, content

void curve_plot(Plots& out, const nlohmann::json& detail, const char* key, const std::string& stem,
                const std::string& title, const std::string& ylabel) {
  if (!detail.is_object() || !detail.contains("t") || !detail.contains(key)) return;
  const auto& t = detail.at("t");
  const auto& v = detail.at(key);
  Series s;
  for (std::size_t i = 0; i < std::min(t.size(), v.size()); ++i) append(s, json_number(t[i]), v[i]);
  if (s.x.size() >= 2) out.emplace_back(stem + ".svg", render(s, title, "t", ylabel));
}

Plots diagnose_plots(const nlohmann::json& report) {
  Plots out;
  const auto& d = report.at("diagnostics");
  if (d.contains("overlap") && d["overlap"].contains("detail")) {
    const auto& det = d["overlap"]["detail"];
    curve_plot(out, det, "damped", "overlap_damped", "normalised overlap e^{-t} E|A0 ∩ At| / E|A0|", "overlap");
    curve_plot(out, det, "grown", "overlap_grown", "normalised overlap e^{t} E|A0 ∩ At| / E|A0|", "overlap");
  }
  if (d.contains("chaos") && d["chaos"].contains("detail")) {
    curve_plot(out, d["chaos"]["detail"], "coefficient", "chaos", "chaos coefficient", "coefficient");
  }
  if (d.contains("identity") && d["identity"].contains("detail")) {
    curve_plot(out, d["identity"]["detail"], "integrand", "identity_integrand", "covariance integrand", "integrand");
  }
  return out;
}

Plots scan_plots(const nlohmann::json& report) {
  Plots out;
  const std::string parameter = report.at("parameter").get<std::string>();
  std::map<std::string, Series> ratios;
  std::vector<std::string> order;
  for (const auto& row : report.at("rows")) {
    if (!row.contains("diagnostics")) continue;
    const double x = json_number(row.at("x"));
    for (const auto& [name, diag] : row.at("diagnostics").items()) {
      if (!diag.contains("rows")) continue;
      const auto& rows = diag.at("rows");
      for (const auto& r : rows) {
        const std::string key = rows.size() == 1 ? name : name + ":" + r.at("quantity").get<std::string>();
        const bool has_ratio = r.contains("ratio");
        const std::string col = key + (has_ratio ? "_ratio" : "_value");
        if (!ratios.count(col)) order.push_back(col);
        append(ratios[col], x, has_ratio ? r.at("ratio") : r.at("value"));
      }
    }
  }
  for (const auto& col : order) {
    const Series& s = ratios[col];
    if (s.x.size() >= 2) out.emplace_back("scan_" + file_stem(col) + ".svg", render(s, col, parameter, col));
  }
  return out;
}

}  // namespace

std::vector<std::string> cmd_plot(const std::string& report_path, const std::string& out_dir) {
  std::ifstream is(report_path);
  if (!is) throw InvalidInput("cannot read report " + report_path);
  nlohmann::json report;
  try {
    report = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("report " + report_path + " is not valid JSON: " + e.what());
  }
  CHAOSLAB_REQUIRE(report.is_object() && report.contains("command"), "not a diagnose or scan report");
  const std::string command = report.at("command").get<std::string>();
  Plots plots;
  if (command == "diagnose") {
    plots = diagnose_plots(report);
  } else if (command == "scan") {
    plots = scan_plots(report);
  } else {
    throw InvalidInput("cannot plot a \"" + command + "\" report");
  }
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  for (const auto& [name, content] : plots) {
    std::ofstream os(fs::path(out_dir) / name, std::ios::binary);
    os << content;
    if (!os) throw std::runtime_error("cannot write " + name);
    written.push_back(name);
  }
  return written;
}

}  // namespace chaoslab

#include "flexxnoise/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flexxnoise {

AxialKlResult axial_kl(const FrameStack& stack, const PixelRect& roi,
                       const PlaneFit& plane,
                       const NoiseModelCoefficients& coeffs) {
  const TemporalStats stats = temporal_statistics(stack);
  const CameraIntrinsics& k = stack.condition.intrinsics;
  const int min_count = (stack.frame_count() + 1) / 2;
  if (roi.width <= 0 || roi.height <= 0 || roi.x0 < 0 || roi.y0 < 0 ||
      roi.x1() > stack.width() || roi.y1() > stack.height()) {
    throw DomainError("ROI does not fit inside the frame");
  }

  AxialKlResult result;
  double sum = 0.0;
  for (int y = roi.y0; y < roi.y1(); ++y) {
    for (int x = roi.x0; x < roi.x1(); ++x) {
      if (stats.count(y, x) < min_count || !std::isfinite(stats.stddev(y, x))) {
        ++result.skipped;
        continue;
      }
      if (!(stats.stddev(y, x) > 0.0f)) {
        ++result.skipped;  // zero temporal variance: KL undefined
        continue;
      }
      const double z_model = plane_depth_at(plane, k, x, y);
      if (!std::isfinite(z_model) || z_model <= 0.0) {
        ++result.skipped;
        continue;
      }
      const double cos_theta = std::clamp(
          std::abs(plane.normal.dot(k.ray(x, y).normalized())), 0.0, 1.0);
      const double theta = std::acos(cos_theta);
      const double sigma_model = axial_sigma(coeffs, z_model, theta);
      sum += gaussian_kl<double>(stats.mean(y, x), stats.stddev(y, x), z_model,
                                 sigma_model);
      ++result.pixel_count;
    }
  }
  if (result.pixel_count > 0) {
    result.mean_nats = sum / static_cast<double>(result.pixel_count);
  }
  return result;
}

double lateral_kl(const std::vector<double>& residuals_px, double sigma_x_px) {
  if (static_cast<int>(residuals_px.size()) < kMinLateralResiduals) {
    throw DataError("lateral KL needs at least " +
                    std::to_string(kMinLateralResiduals) + " residuals, got " +
                    std::to_string(residuals_px.size()));
  }
  if (!(sigma_x_px > 0.0)) {
    throw DomainError("lateral sigma must be positive");
  }
  double mean = 0.0;
  for (double r : residuals_px) mean += r;
  mean /= static_cast<double>(residuals_px.size());
  double ssq = 0.0;
  for (double r : residuals_px) {
    const double d = r - mean;
    ssq += d * d;
  }
  const double stddev =
      std::sqrt(ssq / static_cast<double>(residuals_px.size() - 1));
  if (!(stddev > 0.0)) {
    throw DataError("edge residuals have zero spread; KL is undefined");
  }
  return gaussian_kl(mean, stddev, 0.0, sigma_x_px);
}

namespace {

std::vector<const KlEntry*> sorted_entries(const KlReport& report) {
  std::vector<const KlEntry*> out;
  out.reserve(report.entries.size());
  for (const KlEntry& e : report.entries) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const KlEntry* a, const KlEntry* b) {
    if (a->condition.mode_id != b->condition.mode_id) {
      return a->condition.mode_id < b->condition.mode_id;
    }
    if (a->condition.nominal_distance_m != b->condition.nominal_distance_m) {
      return a->condition.nominal_distance_m < b->condition.nominal_distance_m;
    }
    return a->condition.nominal_angle_deg < b->condition.nominal_angle_deg;
  });
  return out;
}

struct WeightedMean {
  double sum = 0.0;
  double weight = 0.0;

  void add(double value, double w) {
    sum += value * w;
    weight += w;
  }
  std::optional<double> value() const {
    if (weight <= 0.0) return std::nullopt;
    return sum / weight;
  }
};

}  // namespace

KlSummary summarize(const KlReport& report) {
  std::map<std::string, WeightedMean> axial, lateral;
  WeightedMean axial_all, lateral_all;
  for (const KlEntry& e : report.entries) {
    if (e.axial_nats) {
      const auto w = static_cast<double>(e.axial_pixel_count);
      axial[e.condition.mode_id].add(*e.axial_nats, w);
      axial_all.add(*e.axial_nats, w);
    }
    if (e.lateral_nats) {
      const auto w = static_cast<double>(e.lateral_count);
      lateral[e.condition.mode_id].add(*e.lateral_nats, w);
      lateral_all.add(*e.lateral_nats, w);
    }
  }
  KlSummary summary;
  for (const auto& [mode, mean] : axial) {
    if (auto v = mean.value()) summary.axial_per_mode[mode] = *v;
  }
  for (const auto& [mode, mean] : lateral) {
    if (auto v = mean.value()) summary.lateral_per_mode[mode] = *v;
  }
  summary.axial_overall = axial_all.value();
  summary.lateral_overall = lateral_all.value();
  return summary;
}

namespace {

std::string emit_json(const KlReport& report) {
  nlohmann::json doc;
  doc["format"] = "flexxnoise.kl_report";
  doc["version"] = 1;
  doc["conditions"] = nlohmann::json::array();
  for (const KlEntry* e : sorted_entries(report)) {
    nlohmann::json c;
    c["mode_id"] = e->condition.mode_id;
    c["distance_m"] = e->condition.nominal_distance_m;
    c["angle_deg"] = e->condition.nominal_angle_deg;
    if (e->axial_nats) {
      c["axial"] = {{"nats", *e->axial_nats},
                    {"pixel_count", e->axial_pixel_count},
                    {"skipped", e->axial_skipped}};
    } else {
      c["axial"] = nullptr;
    }
    if (e->lateral_nats) {
      c["lateral"] = {{"nats", *e->lateral_nats},
                      {"sample_count", e->lateral_count}};
    } else {
      c["lateral"] = nullptr;
    }
    doc["conditions"].push_back(std::move(c));
  }

  const KlSummary summary = summarize(report);
  nlohmann::json s;
  s["axial"]["per_mode"] = summary.axial_per_mode;
  s["axial"]["overall"] =
      summary.axial_overall ? nlohmann::json(*summary.axial_overall)
                            : nlohmann::json(nullptr);
  s["lateral"]["per_mode"] = summary.lateral_per_mode;
  s["lateral"]["overall"] =
      summary.lateral_overall ? nlohmann::json(*summary.lateral_overall)
                              : nlohmann::json(nullptr);
  doc["summary"] = std::move(s);
  return doc.dump(2) + "\n";
}

std::string format_cell(std::optional<double> v) {
  if (!v) return std::string("      -");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%7.4f", *v);
  return std::string(buf);
}

std::string emit_text(const KlReport& report) {
  const auto entries = sorted_entries(report);

  std::set<double> angle_set;
  std::set<std::string> mode_set;
  for (const KlEntry* e : entries) {
    mode_set.insert(e->condition.mode_id);
    if (e->axial_nats) angle_set.insert(e->condition.nominal_angle_deg);
  }
  const std::vector<double> angles(angle_set.begin(), angle_set.end());

  std::ostringstream out;
  out << "axial KL divergence (nats), pixel-weighted mean over distances\n";
  out << "mode          ";
  for (double a : angles) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "  %5.0fdeg", a);
    out << buf;
  }
  out << "      avg\n";
  for (const std::string& mode : mode_set) {
    char name[32];
    std::snprintf(name, sizeof(name), "%-14s", mode.c_str());
    out << name;
    WeightedMean row_mean;
    for (double a : angles) {
      WeightedMean cell;
      for (const KlEntry* e : entries) {
        if (e->condition.mode_id == mode &&
            e->condition.nominal_angle_deg == a && e->axial_nats) {
          const auto w = static_cast<double>(e->axial_pixel_count);
          cell.add(*e->axial_nats, w);
          row_mean.add(*e->axial_nats, w);
        }
      }
      out << "  " << format_cell(cell.value());
    }
    out << "  " << format_cell(row_mean.value()) << "\n";
  }

  const KlSummary summary = summarize(report);
  out << "\nlateral KL divergence (nats), per mode\n";
  for (const std::string& mode : mode_set) {
    char name[32];
    std::snprintf(name, sizeof(name), "%-14s", mode.c_str());
    auto it = summary.lateral_per_mode.find(mode);
    out << name << "  "
        << format_cell(it == summary.lateral_per_mode.end()
                           ? std::nullopt
                           : std::optional<double>(it->second))
        << "\n";
  }
  if (summary.axial_overall) {
    out << "\noverall axial:   " << format_cell(summary.axial_overall) << "\n";
  }
  if (summary.lateral_overall) {
    out << "overall lateral: " << format_cell(summary.lateral_overall) << "\n";
  }
  return out.str();
}

}  // namespace

std::string emit_report(const KlReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson:
      return emit_json(report);
    case ReportFormat::kText:
      return emit_text(report);
  }
  throw DomainError("unknown report format");
}

}  // namespace flexxnoise

#include "metalogic/report.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "metalogic/errors.hpp"
#include "metalogic/image.hpp"
#include "metalogic/serialization.hpp"

namespace metalogic {

std::string_view to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::aligned: return "aligned";
    case CaseStatus::misaligned: return "misaligned";
    case CaseStatus::errored: return "errored";
  }
  return "errored";
}

VerdictRecord make_record(std::string model, Verdict verdict) {
  VerdictRecord r;
  r.model = std::move(model);
  r.status = verdict.aligned ? CaseStatus::aligned : CaseStatus::misaligned;
  r.verdict = std::move(verdict);
  return r;
}

VerdictRecord make_errored(std::string model, std::string case_id, std::string reason) {
  VerdictRecord r;
  r.model = std::move(model);
  r.status = CaseStatus::errored;
  r.verdict.case_id = std::move(case_id);
  r.verdict.aligned = false;
  r.error = std::move(reason);
  return r;
}

std::optional<double> RateCell::rate() const noexcept {
  const int judged = total - errored;
  if (judged <= 0) return std::nullopt;
  return static_cast<double>(misaligned) / judged;
}

RateCell& RateCell::operator+=(const RateCell& o) noexcept {
  total += o.total;
  errored += o.errored;
  misaligned += o.misaligned;
  return *this;
}

std::string format_rate(std::optional<double> rate) {
  if (!rate) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *rate * 100.0);
  return buf;
}

Aggregate aggregate(std::span<const VerdictRecord> verdicts, const Manifest& manifest) {
  Aggregate agg;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : verdicts) {
    const TestCase& tc = manifest.find(r.verdict.case_id);
    if (!seen.emplace(r.model, tc.case_id).second) {
      throw Error(Errc::duplicate_verdict,
                  "case '" + tc.case_id + "' judged twice for model '" + r.model + "'");
    }
    RateCell cell;
    cell.total = 1;
    cell.errored = r.status == CaseStatus::errored;
    cell.misaligned = r.status == CaseStatus::misaligned;

    auto& t = agg.table;
    t.rows[{r.model, tc.law, tc.modifier}] += cell;
    t.by_law[tc.law] += cell;
    t.by_modifier[tc.modifier] += cell;
    t.by_model[r.model] += cell;
    t.overall += cell;
    if (tc.law == Law::numbering && tc.count && tc.numbered_entity) {
      agg.curves[{r.model, *tc.numbered_entity}][*tc.count] += cell;
    }
    if (r.status == CaseStatus::misaligned) {
      for (auto c : r.verdict.categories) ++agg.category_counts[c];
      if (r.verdict.uncategorized) ++agg.uncategorized;
    }
  }
  return agg;
}

namespace {

json cell_json(const RateCell& c) {
  const auto rate = c.rate();
  return json{{"total", c.total},
              {"errored", c.errored},
              {"misaligned", c.misaligned},
              {"aligned", c.aligned()},
              {"rate_percent", format_rate(rate)}};
}

struct FlatRow {
  std::string scope, model, law, modifier;
  RateCell cell;
};

std::vector<FlatRow> flatten(const RateTable& t) {
  std::vector<FlatRow> out;
  for (const auto& [k, c] : t.rows) {
    out.push_back({"cell", k.model, std::string(to_string(k.law)),
                   std::string(to_string(k.modifier)), c});
  }
  for (const auto& [m, c] : t.by_model) out.push_back({"model", m, "", "", c});
  for (const auto& [l, c] : t.by_law) out.push_back({"law", "", std::string(to_string(l)), "", c});
  for (const auto& [m, c] : t.by_modifier) {
    out.push_back({"modifier", "", "", std::string(to_string(m)), c});
  }
  out.push_back({"overall", "", "", "", t.overall});
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_json(const Aggregate& agg) {
  json rows = json::array();
  for (const auto& r : flatten(agg.table)) {
    json j = cell_json(r.cell);
    j["scope"] = r.scope;
    j["model"] = r.model;
    j["law"] = r.law;
    j["modifier"] = r.modifier;
    rows.push_back(std::move(j));
  }
  json curves = json::array();
  for (const auto& [key, points] : agg.curves) {
    json pts = json::array();
    for (const auto& [n, c] : points) {
      json p = cell_json(c);
      p["count"] = n;
      pts.push_back(std::move(p));
    }
    curves.push_back({{"model", key.first}, {"entity", key.second}, {"points", std::move(pts)}});
  }
  json cats = json::object();
  for (const auto& [c, n] : agg.category_counts) cats[std::string(to_string(c))] = n;
  json out{{"schema_version", kReportSchemaVersion},
           {"tool", kToolName},
           {"version", kToolVersion},
           {"rows", std::move(rows)},
           {"numbering_curves", std::move(curves)},
           {"categories", std::move(cats)},
           {"uncategorized", agg.uncategorized}};
  return out.dump(2) + "\n";
}

std::string render_csv(const Aggregate& agg) {
  std::string out = "scope,model,law,modifier,total,errored,misaligned,aligned,rate_percent\n";
  for (const auto& r : flatten(agg.table)) {
    out += r.scope + "," + csv_field(r.model) + "," + r.law + "," + r.modifier + "," +
           std::to_string(r.cell.total) + "," + std::to_string(r.cell.errored) + "," +
           std::to_string(r.cell.misaligned) + "," + std::to_string(r.cell.aligned()) + "," +
           format_rate(r.cell.rate()) + "\n";
  }
  return out;
}

std::string render_html(const Aggregate& agg) {
  std::ostringstream o;
  o << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>metalogic report</title>\n"
       "<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse}"
       "td,th{border:1px solid #ccc;padding:2px 8px;text-align:right}"
       "td.l{text-align:left}.bar{background:#c0392b;height:10px}"
       ".track{background:#eee;width:200px}</style></head><body>\n";
  o << "<h1>Misalignment rates</h1>\n";
  auto row = [&](const std::string& a, const std::string& b, const std::string& c,
                 const RateCell& cell) {
    const auto rate = cell.rate();
    o << "<tr><td class=\"l\">" << html_escape(a) << "</td><td class=\"l\">" << html_escape(b)
      << "</td><td class=\"l\">" << html_escape(c) << "</td><td>" << cell.total << "</td><td>"
      << cell.errored << "</td><td>" << cell.misaligned << "</td><td>" << format_rate(rate)
      << "</td><td><div class=\"track\"><div class=\"bar\" style=\"width:"
      << format_rate(rate.value_or(0.0)) << "%\"></div></div></td></tr>\n";
  };
  auto header = [&](const char* a, const char* b, const char* c) {
    o << "<table><tr><th>" << a << "</th><th>" << b << "</th><th>" << c
      << "</th><th>total</th><th>errored</th><th>misaligned</th><th>rate %</th><th></th></tr>\n";
  };
  header("model", "law", "modifier");
  for (const auto& [k, c] : agg.table.rows) {
    row(k.model, std::string(to_string(k.law)), std::string(to_string(k.modifier)), c);
  }
  o << "</table>\n<h2>By law</h2>\n";
  header("law", "", "");
  for (const auto& [l, c] : agg.table.by_law) row(std::string(to_string(l)), "", "", c);
  o << "</table>\n<h2>By modifier</h2>\n";
  header("modifier", "", "");
  for (const auto& [m, c] : agg.table.by_modifier) row(std::string(to_string(m)), "", "", c);
  o << "</table>\n<h2>By model</h2>\n";
  header("model", "", "");
  for (const auto& [m, c] : agg.table.by_model) row(m, "", "", c);
  row("overall", "", "", agg.table.overall);
  o << "</table>\n";
  if (!agg.curves.empty()) {
    o << "<h2>Numbering</h2>\n";
    header("model", "entity", "count");
    for (const auto& [key, points] : agg.curves) {
      for (const auto& [n, c] : points) row(key.first, key.second, std::to_string(n), c);
    }
    o << "</table>\n";
  }
  o << "<h2>Error categories</h2>\n<table>\n";
  for (const auto& [c, n] : agg.category_counts) {
    o << "<tr><td class=\"l\">" << to_string(c) << "</td><td>" << n << "</td></tr>\n";
  }
  o << "<tr><td class=\"l\">uncategorized</td><td>" << agg.uncategorized << "</td></tr>\n";
  o << "</table>\n</body></html>\n";
  return o.str();
}

std::filesystem::path emit_report(const Aggregate& agg, ReportFormat format,
                                  const std::filesystem::path& dir) {
  switch (format) {
    case ReportFormat::json: {
      auto p = dir / "report.json";
      write_file(p, render_json(agg));
      return p;
    }
    case ReportFormat::csv: {
      auto p = dir / "report.csv";
      write_file(p, render_csv(agg));
      return p;
    }
    case ReportFormat::html: {
      auto p = dir / "report.html";
      write_file(p, render_html(agg));
      return p;
    }
  }
  throw Error(Errc::io, "unknown report format");
}

std::vector<CsvRow> parse_report_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char c = csv[i];
    if (quoted) {
      if (c == '"' && i + 1 < csv.size() && csv[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(cur));
      cur.clear();
      records.push_back(std::move(fields));
      fields.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!cur.empty() || !fields.empty()) {
    fields.push_back(std::move(cur));
    records.push_back(std::move(fields));
  }
  if (records.empty() || records[0].size() != 9 || records[0][0] != "scope") {
    throw Error(Errc::schema, "report CSV has an unexpected header");
  }
  std::vector<CsvRow> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i];
    if (f.size() != 9) {
      throw Error(Errc::schema, "report CSV row " + std::to_string(i) + " has " +
                                    std::to_string(f.size()) + " fields");
    }
    try {
      out.push_back({f[0], f[1], f[2], f[3], std::stoi(f[4]), std::stoi(f[5]), std::stoi(f[6]),
                     std::stoi(f[7]), f[8]});
    } catch (const std::logic_error&) {
      throw Error(Errc::schema, "report CSV row " + std::to_string(i) + " has a bad count");
    }
  }
  return out;
}

std::string counterexample_dirname(const Verdict& verdict) {
  std::string out = verdict.case_id + "__";
  if (verdict.categories.empty()) return out + "uncategorized";
  for (std::size_t i = 0; i < verdict.categories.size(); ++i) {
    if (i) out += '_';
    out += to_string(verdict.categories[i]);
  }
  return out;
}

namespace {

std::string overlay_png(const std::filesystem::path& image, const DetectionResult* det) {
  RgbImage img;
  bool have = false;
  if (std::filesystem::exists(image)) {
    try {
      img = decode_png(read_file(image));
      have = true;
    } catch (const Error&) {
    }
  }
  if (!have) {
    const int w = det && det->width > 0 ? det->width : 512;
    const int h = det && det->height > 0 ? det->height : 512;
    img = RgbImage(w, h, {255, 255, 255});
  }
  if (det) {
    for (const auto& o : det->ocr_regions) {
      img.stroke_rect(o.bbox.x1, o.bbox.y1, o.bbox.x2, o.bbox.y2, {128, 128, 128}, 3);
    }
    for (const auto& d : det->detections) {
      img.stroke_rect(d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2, {0, 0, 0}, 3);
      img.stroke_rect(d.bbox.x1 + 3, d.bbox.y1 + 3, d.bbox.x2 - 3, d.bbox.y2 - 3,
                      label_color(d.label), 2);
      img.cross(d.bbox.cx(), d.bbox.cy(), 6, {0, 0, 0});
    }
  }
  return encode_png(img);
}

}  // namespace

std::optional<std::filesystem::path> log_counterexample(const std::filesystem::path& root,
                                                        const CounterexampleInputs& in) {
  if (!in.tc || !in.record) throw Error(Errc::missing_stage_input, "counterexample needs a case");
  if (in.record->status != CaseStatus::misaligned) return std::nullopt;
  const auto dir = root / in.record->model / counterexample_dirname(in.record->verdict);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  json prompts{{"case_id", in.tc->case_id},
               {"template_id", in.tc->template_id},
               {"prompt_a", in.tc->prompt_a},
               {"prompt_b", in.tc->prompt_b}};
  write_file(dir / "prompts.json", prompts.dump(2) + "\n");
  write_file(dir / "verdict.json", json(*in.record).dump(2) + "\n");
  const std::pair<const std::filesystem::path*, const DetectionResult*> sides[] = {
      {&in.image_a, in.det_a}, {&in.image_b, in.det_b}};
  const char* names[] = {"a", "b"};
  for (int s = 0; s < 2; ++s) {
    const auto& [image, det] = sides[s];
    const std::string n = names[s];
    if (!image->empty() && std::filesystem::exists(*image)) {
      write_file(dir / (n + image->extension().string()), read_file(*image));
    }
    if (det) write_file(dir / ("detections_" + n + ".json"), json(*det).dump(2) + "\n");
    write_file(dir / ("overlay_" + n + ".png"), overlay_png(*image, det));
  }
  return dir;
}

}  // namespace metalogic

#pragma once

// CSV and JSON I/O for the command-line tool.
//
// CSV files are UTF-8 with a header row; lines starting with '#' are comments
// and the writers emit "# prospectus <kind> v1" as the first line. Schemas:
//   options.csv  mode,walk,wait,ride,tariff
//   choice.csv   respondent_id,task_id,mode,walk,wait,ride,tariff,chosen   (one row per option, chosen 0/1)
//   ce.csv       respondent_id,item_id,u_lo,u_hi,p_lo,reference,ce
//   lottery.csv  respondent_id,lottery_id,frame,p,gain,loss,response
//   series.csv   experiment,quadrant,variant,reference_mode,distribution,gamma,reference,u_o,u_s,a_o,a_s,ra,p_o,p_s
// Every number is written with 12 significant digits.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "prospectus/choice.hpp"
#include "prospectus/detectors.hpp"
#include "prospectus/error.hpp"
#include "prospectus/estimation.hpp"
#include "prospectus/experiments.hpp"
#include "prospectus/numeric.hpp"

namespace prospectus::io {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV reading

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

class CsvTable {
 public:
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ParseError("missing column '" + std::string(name) + "'", header_line, 0);
  }

  std::size_t header_line = 1;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& text, std::size_t line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
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
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line, text.size());
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text.front() == '#') continue;
    auto fields = detail::split_csv_line(text, line);
    if (!have_header) {
      t.header = std::move(fields);
      t.header_line = line;
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line, 0);
    }
    t.rows.push_back({line, std::move(fields)});
  }
  if (!have_header) throw ParseError("empty file: no header row", line == 0 ? 1 : line, 0);
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_csv(in);
}

inline double field_double(const CsvRow& row, std::size_t col, std::string_view name) {
  const std::string& s = row.fields[col];
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("column '" + std::string(name) + "': '" + s + "' is not a finite number",
                     row.line, col + 1);
  }
  return v;
}

inline long long field_integer(const CsvRow& row, std::size_t col, std::string_view name) {
  const std::string& s = row.fields[col];
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("column '" + std::string(name) + "': '" + s + "' is not an integer", row.line,
                     col + 1);
  }
  return v;
}

inline const std::string& field_text(const CsvRow& row, std::size_t col, std::string_view name) {
  if (row.fields[col].empty()) {
    throw ParseError("column '" + std::string(name) + "' is empty", row.line, col + 1);
  }
  return row.fields[col];
}

inline Mode field_mode(const CsvRow& row, std::size_t col) {
  const auto m = mode_from_string(row.fields[col]);
  if (!m) {
    throw ParseError("column 'mode': '" + row.fields[col] + "' is not transit, uberx or srs",
                     row.line, col + 1);
  }
  return *m;
}

namespace detail {

// Domain checks on a parsed row become parse errors at that line.
template <class F>
void at_line(std::size_t line, F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line, 0);
  } catch (const std::domain_error& e) {
    throw ParseError(e.what(), line, 0);
  }
}

}  // namespace detail

inline std::vector<TripOption> read_options(const CsvTable& t) {
  const std::size_t c_mode = t.column("mode"), c_walk = t.column("walk"), c_wait = t.column("wait"),
                    c_ride = t.column("ride"), c_tariff = t.column("tariff");
  std::vector<TripOption> out;
  for (const auto& r : t.rows) {
    TripOption o{field_mode(r, c_mode),
                 {field_double(r, c_walk, "walk"), field_double(r, c_wait, "wait"),
                  field_double(r, c_ride, "ride")},
                 field_double(r, c_tariff, "tariff")};
    detail::at_line(r.line, [&] { o.validate(); });
    out.push_back(o);
  }
  if (out.size() < 2) throw ParseError("options file needs at least two options", t.header_line, 0);
  return out;
}

inline std::vector<ChoiceObservation> read_choices(const CsvTable& t) {
  const std::size_t c_id = t.column("respondent_id"), c_task = t.column("task_id"),
                    c_mode = t.column("mode"), c_walk = t.column("walk"), c_wait = t.column("wait"),
                    c_ride = t.column("ride"), c_tariff = t.column("tariff"),
                    c_chosen = t.column("chosen");
  std::vector<ChoiceObservation> out;
  std::vector<std::size_t> first_line;
  std::vector<int> n_chosen;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& r : t.rows) {
    const auto key = std::pair{field_text(r, c_id, "respondent_id"), field_text(r, c_task, "task_id")};
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      out.push_back({key.first, {}, 0});
      first_line.push_back(r.line);
      n_chosen.push_back(0);
    }
    ChoiceObservation& obs = out[it->second];
    TripOption o{field_mode(r, c_mode),
                 {field_double(r, c_walk, "walk"), field_double(r, c_wait, "wait"),
                  field_double(r, c_ride, "ride")},
                 field_double(r, c_tariff, "tariff")};
    detail::at_line(r.line, [&] { o.validate(); });
    const long long chosen = field_integer(r, c_chosen, "chosen");
    if (chosen != 0 && chosen != 1) throw ParseError("column 'chosen' must be 0 or 1", r.line, c_chosen + 1);
    if (chosen == 1) {
      obs.chosen = obs.options.size();
      ++n_chosen[it->second];
    }
    obs.options.push_back(o);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (n_chosen[i] != 1) {
      throw ParseError("task '" + std::string(out[i].respondent_id) + "' must mark exactly one chosen option",
                       first_line[i], 0);
    }
    detail::at_line(first_line[i], [&] { out[i].validate(); });
  }
  if (out.empty()) throw ParseError("no choice rows", t.header_line, 0);
  return out;
}

inline std::vector<CertaintyEquivalentObservation> read_certainty_equivalents(const CsvTable& t) {
  const std::size_t c_id = t.column("respondent_id"), c_lo = t.column("u_lo"),
                    c_hi = t.column("u_hi"), c_p = t.column("p_lo"), c_ref = t.column("reference"),
                    c_ce = t.column("ce");
  t.column("item_id");
  std::vector<CertaintyEquivalentObservation> out;
  for (const auto& r : t.rows) {
    CertaintyEquivalentObservation o{field_text(r, c_id, "respondent_id"), field_double(r, c_lo, "u_lo"),
                                     field_double(r, c_hi, "u_hi"), field_double(r, c_p, "p_lo"),
                                     field_double(r, c_ref, "reference"), field_double(r, c_ce, "ce")};
    detail::at_line(r.line, [&] { o.validate(); });
    out.push_back(o);
  }
  if (out.empty()) throw ParseError("no certainty-equivalent rows", t.header_line, 0);
  return out;
}

inline std::vector<LotteryResponse> read_lotteries(const CsvTable& t) {
  const std::size_t c_id = t.column("respondent_id"), c_lot = t.column("lottery_id"),
                    c_frame = t.column("frame"), c_p = t.column("p"), c_gain = t.column("gain"),
                    c_loss = t.column("loss"), c_resp = t.column("response");
  std::vector<LotteryResponse> out;
  for (const auto& r : t.rows) {
    const auto frame = frame_from_string(r.fields[c_frame]);
    if (!frame) {
      throw ParseError("column 'frame': '" + r.fields[c_frame] + "' is not gain, loss or mixed", r.line,
                       c_frame + 1);
    }
    LotteryResponse o{field_text(r, c_id, "respondent_id"), field_text(r, c_lot, "lottery_id"), *frame,
                      field_double(r, c_p, "p"), field_double(r, c_gain, "gain"),
                      field_double(r, c_loss, "loss"), field_double(r, c_resp, "response")};
    detail::at_line(r.line, [&] { o.validate(); });
    out.push_back(o);
  }
  if (out.empty()) throw ParseError("no lottery rows", t.header_line, 0);
  return out;
}

// ---------------------------------------------------------------------------
// CSV writing

namespace detail {

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void write_fields(std::ostream& out, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out << ',';
    out << f;
    first = false;
  }
  out << '\n';
}

}  // namespace detail

using numeric::format_number;

inline void write_choices(std::ostream& out, const std::vector<ChoiceObservation>& obs) {
  out << "# prospectus choice v1\n";
  out << "respondent_id,task_id,mode,walk,wait,ride,tariff,chosen\n";
  std::map<std::string, std::size_t> task_no;
  for (const auto& o : obs) {
    const std::size_t task = ++task_no[o.respondent_id];
    for (std::size_t j = 0; j < o.options.size(); ++j) {
      const auto& opt = o.options[j];
      detail::write_fields(out, {detail::quote(o.respondent_id), "t" + std::to_string(task),
                                 std::string(to_string(opt.mode)), format_number(opt.times.walk),
                                 format_number(opt.times.wait), format_number(opt.times.ride),
                                 format_number(opt.tariff), j == o.chosen ? "1" : "0"});
    }
  }
}

inline void write_certainty_equivalents(std::ostream& out,
                                        const std::vector<CertaintyEquivalentObservation>& obs) {
  out << "# prospectus ce v1\n";
  out << "respondent_id,item_id,u_lo,u_hi,p_lo,reference,ce\n";
  std::map<std::string, std::size_t> item_no;
  for (const auto& o : obs) {
    detail::write_fields(out, {detail::quote(o.respondent_id),
                               "i" + std::to_string(++item_no[o.respondent_id]), format_number(o.u_lo),
                               format_number(o.u_hi), format_number(o.p_lo),
                               format_number(o.reference), format_number(o.ce)});
  }
}

inline void write_lotteries(std::ostream& out, const std::vector<LotteryResponse>& rows) {
  out << "# prospectus lottery v1\n";
  out << "respondent_id,lottery_id,frame,p,gain,loss,response\n";
  for (const auto& r : rows) {
    detail::write_fields(out, {detail::quote(r.respondent_id), detail::quote(r.lottery_id),
                               std::string(to_string(r.frame)), format_number(r.p),
                               format_number(r.gain), format_number(r.loss),
                               format_number(r.response)});
  }
}

inline void write_series_header(std::ostream& out) {
  out << "# prospectus series v1\n";
  out << "experiment,quadrant,variant,reference_mode,distribution,gamma,reference,u_o,u_s,a_o,a_s,"
         "ra,p_o,p_s\n";
}

inline void write_series_rows(std::ostream& out, const ExperimentSeries& s) {
  for (const auto& r : s.records) {
    detail::write_fields(out, {s.experiment, s.quadrant, s.variant, s.reference_mode, s.distribution,
                               format_number(r.gamma), format_number(r.reference),
                               format_number(r.u_o), format_number(r.u_s), format_number(r.a_o),
                               format_number(r.a_s), format_number(r.ra), format_number(r.p_o),
                               format_number(r.p_s)});
  }
}

// ---------------------------------------------------------------------------
// JSON

/// Finite numbers as JSON numbers; inf and nan as strings.
inline Json number(double x) {
  if (!std::isfinite(x)) return numeric::format_number(x);
  return x;
}

inline Json optional_number(const std::optional<double>& x) {
  return x ? number(*x) : Json(nullptr);
}

inline Json to_json(const EstimationResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = r.model;
  j["converged"] = r.converged;
  j["message"] = r.message;
  j["iterations"] = r.iterations;
  j["seed"] = r.seed;
  j["n_observations"] = r.n_observations;
  j["log_likelihood"] = optional_number(r.log_likelihood);
  j["residual_norm"] = optional_number(r.residual_norm);
  Json params = Json::array();
  for (const auto& p : r.parameters) {
    Json q;
    q["name"] = p.name;
    q["estimate"] = number(p.estimate);
    q["se"] = optional_number(p.se);
    q["random"] = p.random;
    if (p.random) {
      q["sd"] = number(p.sd);
      q["sd_se"] = optional_number(p.sd_se);
    }
    q["identified"] = p.identified;
    params.push_back(q);
  }
  j["parameters"] = params;
  j["warnings"] = r.warnings;
  Json trace = Json::array();
  for (double v : r.trace) trace.push_back(number(v));
  j["trace"] = trace;
  return j;
}

inline Json to_json(const EffectsReport& e) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  Json refl;
  refl["rate"] = optional_number(e.reflection.rate);
  refl["n_evaluated"] = e.reflection.flagged.size();
  refl["n_excluded"] = e.reflection.n_excluded;
  j["reflection"] = refl;
  Json bands = Json::array();
  auto band = [](const BandRate& b, const std::string& label) {
    Json o;
    o["band"] = label;
    o["rate"] = optional_number(b.rate);
    o["n_evaluated"] = b.n_evaluated;
    o["n_flagged"] = b.n_flagged;
    return o;
  };
  for (const auto& b : e.weighting.bands) {
    bands.push_back(band(b, format_number(b.band.p1) + "-" + format_number(b.band.p2)));
  }
  bands.push_back(band(e.weighting.any, "any"));
  j["probability_overweighting"] = bands;
  Json la;
  la["mean_ratio"] = optional_number(e.loss_aversion.mean_ratio);
  la["median_ratio"] = optional_number(e.loss_aversion.median_ratio);
  la["n_respondents"] = e.loss_aversion.n_respondents;
  la["n_excluded_rows"] = e.loss_aversion.n_excluded_rows;
  j["loss_aversion"] = la;
  return j;
}

namespace detail {

inline void dump_value(const Json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case Json::value_t::number_float:
      // Same 12-digit text as the CSV writers.
      out += numeric::format_number(j.get<double>());
      break;
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump_value(it.value(), out, depth + 1);
      }
      out += "\n" + close + "}";
      break;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        dump_value(v, out, depth + 1);
      }
      out += "\n" + close + "]";
      break;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Pretty JSON with a trailing newline; floating-point values use 12
/// significant digits.
inline std::string dump(const Json& j) {
  std::string out;
  detail::dump_value(j, out, 0);
  return out + "\n";
}

}  // namespace prospectus::io

#include "tsdiff/data/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tsdiff/common/errors.hpp"

namespace tsdiff {

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void row_error(std::size_t line_no, const std::string& msg) {
  throw DataError("csv row " + std::to_string(line_no) + ": " + msg);
}

double parse_real(const std::string& cell, std::size_t line_no, const char* what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size())
    row_error(line_no, std::string("bad ") + what + " value '" + cell + "'");
  return v;
}

long parse_int(const std::string& cell, std::size_t line_no, const char* what) {
  long v = 0;
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size())
    row_error(line_no, std::string("non-integer ") + what + " cell '" + cell + "'");
  return v;
}

}  // namespace

void write_csv(const PairedDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw DataError("cannot open for writing: " + path.string());

  const auto F = ds.channels();
  const auto kc = ds.n_categorical();
  const auto kn = ds.n_continuous();
  out << "sample_id,t";
  for (Eigen::Index f = 0; f < F; ++f) out << ",x_" << f;
  for (Eigen::Index k = 0; k < kc; ++k) out << ",cat_" << k;
  for (Eigen::Index k = 0; k < kn; ++k) out << ",cont_" << k;
  out << "\n";

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    for (Eigen::Index t = 0; t < s.series.horizon(); ++t) {
      out << i << ',' << t;
      for (Eigen::Index f = 0; f < F; ++f) out << ',' << format_real(s.series.values(t, f));
      for (Eigen::Index k = 0; k < kc; ++k) out << ',' << s.meta.categorical(t, k);
      for (Eigen::Index k = 0; k < kn; ++k) out << ',' << format_real(s.meta.continuous(t, k));
      out << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

PairedDataset read_csv(const std::filesystem::path& path,
                       const std::optional<std::vector<int>>& declared_cardinalities) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty csv: " + path.string());
  auto header = split_line(line);

  // Header layout: sample_id, t, x_*, cat_*, cont_*.
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "t")
    throw DataError("csv header must start with sample_id,t: " + path.string());
  Eigen::Index F = 0, kc = 0, kn = 0;
  std::size_t pos = 2;
  while (pos < header.size() && header[pos].rfind("x_", 0) == 0) ++pos, ++F;
  while (pos < header.size() && header[pos].rfind("cat_", 0) == 0) ++pos, ++kc;
  while (pos < header.size() && header[pos].rfind("cont_", 0) == 0) ++pos, ++kn;
  if (pos != header.size())
    throw DataError("unrecognized csv column '" + header[pos] + "' in " + path.string());
  if (F < 1) throw DataError("csv declares no series columns: " + path.string());
  if (kc + kn < 1) throw DataError("csv declares no metadata columns: " + path.string());
  if (declared_cardinalities &&
      static_cast<Eigen::Index>(declared_cardinalities->size()) != kc)
    throw DataError("declared cardinalities do not match csv cat column count");

  const std::size_t n_cols = header.size();
  struct RawSample {
    std::vector<std::vector<double>> x;     // per row
    std::vector<std::vector<long>> cat;     // NA encoded as -1
    std::vector<std::vector<double>> cont;
  };
  std::map<long, RawSample> raw;  // ordered by sample_id
  long prev_sample = -1;
  long prev_t = -1;
  bool saw_na = false;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != n_cols)
      row_error(line_no, "expected " + std::to_string(n_cols) + " fields, got " +
                             std::to_string(cells.size()));
    long sid = parse_int(cells[0], line_no, "sample_id");
    long t = parse_int(cells[1], line_no, "t");
    if (sid < prev_sample || (sid == prev_sample && t <= prev_t))
      row_error(line_no, "rows must be sorted by (sample_id, t)");
    if (sid != prev_sample && t != 0) row_error(line_no, "sample must start at t=0");
    if (sid == prev_sample && t != prev_t + 1) row_error(line_no, "missing timestep row");
    prev_sample = sid;
    prev_t = t;

    auto& rs = raw[sid];
    std::vector<double> x(static_cast<std::size_t>(F));
    std::vector<long> cat(static_cast<std::size_t>(kc));
    std::vector<double> cont(static_cast<std::size_t>(kn));
    std::size_t c = 2;
    for (Eigen::Index f = 0; f < F; ++f)
      x[static_cast<std::size_t>(f)] = parse_real(cells[c++], line_no, "series");
    for (Eigen::Index k = 0; k < kc; ++k) {
      const auto& cell = cells[c++];
      if (cell == "NA") {
        if (declared_cardinalities)
          row_error(line_no, "NA not representable under declared cardinalities");
        cat[static_cast<std::size_t>(k)] = -1;
        saw_na = true;
      } else {
        long v = parse_int(cell, line_no, "categorical");
        if (v < 0) row_error(line_no, "negative categorical label");
        if (declared_cardinalities &&
            v >= (*declared_cardinalities)[static_cast<std::size_t>(k)])
          row_error(line_no, "categorical label " + std::to_string(v) +
                                 " out of range for feature " + std::to_string(k));
        cat[static_cast<std::size_t>(k)] = v;
      }
    }
    for (Eigen::Index k = 0; k < kn; ++k)
      cont[static_cast<std::size_t>(k)] = parse_real(cells[c++], line_no, "continuous");
    rs.x.push_back(std::move(x));
    rs.cat.push_back(std::move(cat));
    rs.cont.push_back(std::move(cont));
  }
  if (raw.empty()) throw DataError("csv has no data rows: " + path.string());

  // Cardinalities: declared, or inferred with an extra "unknown" label when
  // NA appeared in that feature.
  std::vector<int> cards(static_cast<std::size_t>(kc), 0);
  if (declared_cardinalities) {
    cards = *declared_cardinalities;
  } else {
    std::vector<bool> feature_has_na(static_cast<std::size_t>(kc), false);
    for (const auto& [sid, rs] : raw)
      for (const auto& row : rs.cat)
        for (Eigen::Index k = 0; k < kc; ++k) {
          long v = row[static_cast<std::size_t>(k)];
          if (v < 0)
            feature_has_na[static_cast<std::size_t>(k)] = true;
          else
            cards[static_cast<std::size_t>(k)] =
                std::max(cards[static_cast<std::size_t>(k)], static_cast<int>(v) + 1);
        }
    for (Eigen::Index k = 0; k < kc; ++k)
      if (feature_has_na[static_cast<std::size_t>(k)]) ++cards[static_cast<std::size_t>(k)];
  }

  PairedDataset ds;
  const auto L = static_cast<Eigen::Index>(raw.begin()->second.x.size());
  for (auto& [sid, rs] : raw) {
    if (static_cast<Eigen::Index>(rs.x.size()) != L)
      throw DataError("sample " + std::to_string(sid) + " has horizon " +
                      std::to_string(rs.x.size()) + ", expected " + std::to_string(L));
    Sample s;
    s.series.values.resize(L, F);
    s.meta.categorical.resize(L, kc);
    s.meta.continuous.resize(L, kn);
    s.meta.cardinalities = cards;
    for (Eigen::Index t = 0; t < L; ++t) {
      for (Eigen::Index f = 0; f < F; ++f)
        s.series.values(t, f) = rs.x[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)];
      for (Eigen::Index k = 0; k < kc; ++k) {
        long v = rs.cat[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
        // NA becomes the appended unknown label.
        s.meta.categorical(t, k) =
            v < 0 ? cards[static_cast<std::size_t>(k)] - 1 : static_cast<int>(v);
      }
      for (Eigen::Index k = 0; k < kn; ++k)
        s.meta.continuous(t, k) = rs.cont[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
    }
    ds.samples.push_back(std::move(s));
  }
  (void)saw_na;
  validate(ds);
  return ds;
}

}  // namespace tsdiff

#include "rtmix/dataset.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rtmix {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

}  // namespace

Dataset::Dataset(std::vector<Trial> trials, int n_subjects, int n_items,
                 std::vector<std::string> subject_labels,
                 std::vector<std::string> item_labels)
    : trials_(std::move(trials)),
      n_subjects_(n_subjects),
      n_items_(n_items),
      subject_labels_(std::move(subject_labels)),
      item_labels_(std::move(item_labels)) {
  if (trials_.empty()) throw DataError("dataset has no trials");
  if (n_subjects_ < 1 || n_items_ < 1)
    throw DataError("dataset needs at least one subject and one item");

  std::vector<bool> subj_seen(static_cast<std::size_t>(n_subjects_), false);
  std::vector<bool> item_seen(static_cast<std::size_t>(n_items_), false);
  bool plus_seen = false, minus_seen = false;
  std::set<std::pair<int, int>> cells;
  bool repeated = false;
  for (const Trial& t : trials_) {
    if (t.subject < 1 || t.subject > n_subjects_)
      throw DataError("subject index out of range");
    if (t.item < 1 || t.item > n_items_)
      throw DataError("item index out of range");
    if (t.condition != 1 && t.condition != -1)
      throw DataError("condition must be +1 or -1");
    if (!(t.rt > 0.0)) throw DataError("non-positive reading time");
    subj_seen[static_cast<std::size_t>(t.subject - 1)] = true;
    item_seen[static_cast<std::size_t>(t.item - 1)] = true;
    (t.condition == 1 ? plus_seen : minus_seen) = true;
    if (!cells.insert({t.subject, t.item}).second) repeated = true;
  }
  for (int i = 0; i < n_subjects_; ++i)
    if (!subj_seen[static_cast<std::size_t>(i)])
      throw DataError("subject " + std::to_string(i + 1) + " has no trials");
  for (int j = 0; j < n_items_; ++j)
    if (!item_seen[static_cast<std::size_t>(j)])
      throw DataError("item " + std::to_string(j + 1) + " has no trials");
  if (!plus_seen || !minus_seen)
    throw DataError("both conditions (+1 and -1) must be present");
  if (repeated)
    warnings_.push_back("repeated (subject, item) pairs present");
}

Dataset Dataset::without_trial(std::size_t index) const {
  if (index >= trials_.size())
    throw DataError("without_trial: index out of range");
  if (trials_.size() < 2)
    throw DataError("without_trial: cannot drop the only trial");
  std::vector<Trial> rest;
  rest.reserve(trials_.size() - 1);
  for (std::size_t k = 0; k < trials_.size(); ++k)
    if (k != index) rest.push_back(trials_[k]);
  return Dataset(Unchecked{}, std::move(rest), n_subjects_, n_items_,
                 subject_labels_, item_labels_);
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"subject", "item", "condition", "rt"};
  for (const auto& col : expected) {
    bool found = false;
    for (const auto& h : header)
      if (h == col) found = true;
    if (!found) throw DataError("missing column: " + col);
  }
  // column order is fixed after the header check
  std::vector<std::size_t> pos(4);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t h = 0; h < header.size(); ++h)
      if (header[h] == expected[k]) pos[k] = h;

  std::map<std::string, int> subj_index, item_index;
  std::vector<std::string> subj_labels, item_labels;
  std::vector<Trial> trials;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields");
    const std::string& subj = fields[pos[0]];
    const std::string& item = fields[pos[1]];
    const std::string& cond = fields[pos[2]];
    const std::string& rt_s = fields[pos[3]];

    Trial t;
    if (auto it = subj_index.find(subj); it != subj_index.end()) {
      t.subject = it->second;
    } else {
      t.subject = static_cast<int>(subj_labels.size()) + 1;
      subj_index[subj] = t.subject;
      subj_labels.push_back(subj);
    }
    if (auto it = item_index.find(item); it != item_index.end()) {
      t.item = it->second;
    } else {
      t.item = static_cast<int>(item_labels.size()) + 1;
      item_index[item] = t.item;
      item_labels.push_back(item);
    }

    if (cond == "1" || cond == "+1") {
      t.condition = 1;
    } else if (cond == "-1") {
      t.condition = -1;
    } else {
      throw DataError("line " + std::to_string(line_no) +
                      ": condition must be +1 or -1, got '" + cond + "'");
    }

    if (!parse_double(rt_s, t.rt))
      throw DataError("line " + std::to_string(line_no) +
                      ": non-numeric reading time '" + rt_s + "'");
    if (!(t.rt > 0.0))
      throw DataError("non-positive reading time, line " +
                      std::to_string(line_no));
    trials.push_back(t);
  }
  if (trials.empty()) throw DataError("no data rows in " + path);

  return Dataset(std::move(trials), static_cast<int>(subj_labels.size()),
                 static_cast<int>(item_labels.size()), std::move(subj_labels),
                 std::move(item_labels));
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "subject,item,condition,rt\n";
  char buf[64];
  for (const Trial& t : d.trials()) {
    const std::string subj = d.subject_labels().empty()
                                 ? std::to_string(t.subject)
                                 : d.subject_labels()[static_cast<std::size_t>(t.subject - 1)];
    const std::string item = d.item_labels().empty()
                                 ? std::to_string(t.item)
                                 : d.item_labels()[static_cast<std::size_t>(t.item - 1)];
    std::snprintf(buf, sizeof(buf), "%.17g", t.rt);
    out << subj << ',' << item << ',' << (t.condition > 0 ? "1" : "-1") << ','
        << buf << '\n';
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
condition_split(const Dataset& d) {
  std::vector<std::size_t> plus, minus;
  for (std::size_t k = 0; k < d.size(); ++k)
    (d.trials()[k].condition == 1 ? plus : minus).push_back(k);
  return {plus, minus};
}

}  // namespace rtmix

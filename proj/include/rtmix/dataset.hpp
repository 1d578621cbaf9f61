#ifndef RTMIX_DATASET_HPP
#define RTMIX_DATASET_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rtmix {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One reading-time observation. Subject/item indices are dense and 1-based;
// condition is the +1/-1 sum code; rt is in milliseconds and strictly positive.
struct Trial {
  int subject = 0;
  int item = 0;
  int condition = 0;
  double rt = 0.0;
};

// Immutable two-condition crossed subject/item dataset. Trial order is fixed
// at construction: pointwise log-likelihood row i always refers to trials()[i].
class Dataset {
 public:
  // Validates invariants: rt > 0, condition in {+1,-1}, dense 1..I / 1..J
  // coverage, both conditions present. Throws DataError otherwise.
  Dataset(std::vector<Trial> trials, int n_subjects, int n_items,
          std::vector<std::string> subject_labels = {},
          std::vector<std::string> item_labels = {});

  // Same trials minus one, keeping I and J fixed even if that leaves a
  // subject or item unobserved. Used by leave-one-out refits.
  Dataset without_trial(std::size_t index) const;

  const std::vector<Trial>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  int n_subjects() const { return n_subjects_; }
  int n_items() const { return n_items_; }

  // original CSV labels, index 0 <-> dense index 1
  const std::vector<std::string>& subject_labels() const { return subject_labels_; }
  const std::vector<std::string>& item_labels() const { return item_labels_; }

  // non-fatal notes from loading, e.g. repeated (subject, item) pairs
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Unchecked {};
  Dataset(Unchecked, std::vector<Trial> trials, int n_subjects, int n_items,
          std::vector<std::string> subject_labels,
          std::vector<std::string> item_labels)
      : trials_(std::move(trials)),
        n_subjects_(n_subjects),
        n_items_(n_items),
        subject_labels_(std::move(subject_labels)),
        item_labels_(std::move(item_labels)) {}

  std::vector<Trial> trials_;
  int n_subjects_ = 0;
  int n_items_ = 0;
  std::vector<std::string> subject_labels_;
  std::vector<std::string> item_labels_;
  std::vector<std::string> warnings_;

  friend Dataset load_csv(const std::string& path);
};

// Header must be `subject,item,condition,rt`. Labels may be arbitrary
// strings; they are remapped to dense 1-based indices in first-appearance
// order. Row-level problems report the 1-based file line.
Dataset load_csv(const std::string& path);

void write_csv(const Dataset& d, const std::string& path);

// 0-based trial indices of the +1 condition and the -1 condition.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
condition_split(const Dataset& d);

}  // namespace rtmix

#endif

#pragma once

#include <cassert>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace gknn {

/// Addressable binary min-heap over item ids [0, capacity) with decrease-key.
/// Equal keys are ordered by ascending id so pop order is deterministic.
template <typename Key>
class IndexedMinHeap {
public:
  explicit IndexedMinHeap(std::size_t capacity) : pos_(capacity, kAbsent) {}

  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  bool contains(std::size_t id) const { return pos_[id] != kAbsent; }
  const Key& key_of(std::size_t id) const { return heap_[pos_[id]].key; }
  std::size_t top_id() const { return heap_.front().id; }
  const Key& top_key() const { return heap_.front().key; }

  void push(std::size_t id, const Key& key) {
    assert(!contains(id));
    heap_.push_back({key, id});
    pos_[id] = heap_.size() - 1;
    sift_up(heap_.size() - 1);
  }

  enum class Update { inserted, decreased, unchanged };

  Update decrease_or_insert(std::size_t id, const Key& key) {
    if (!contains(id)) {
      push(id, key);
      return Update::inserted;
    }
    const std::size_t p = pos_[id];
    if (!(key < heap_[p].key)) return Update::unchanged;
    heap_[p].key = key;
    sift_up(p);
    return Update::decreased;
  }

  std::pair<std::size_t, Key> pop() {
    assert(!heap_.empty());
    Slot top = heap_.front();
    pos_[top.id] = kAbsent;
    if (heap_.size() > 1) {
      heap_.front() = heap_.back();
      pos_[heap_.front().id] = 0;
      heap_.pop_back();
      sift_down(0);
    } else {
      heap_.pop_back();
    }
    return {top.id, top.key};
  }

private:
  static constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();

  struct Slot {
    Key key;
    std::size_t id;
  };

  static bool less(const Slot& a, const Slot& b) {
    if (a.key < b.key) return true;
    if (b.key < a.key) return false;
    return a.id < b.id;
  }

  void place(std::size_t i, const Slot& s) {
    heap_[i] = s;
    pos_[s.id] = i;
  }

  void sift_up(std::size_t i) {
    Slot s = heap_[i];
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (!less(s, heap_[parent])) break;
      place(i, heap_[parent]);
      i = parent;
    }
    place(i, s);
  }

  void sift_down(std::size_t i) {
    Slot s = heap_[i];
    const std::size_t n = heap_.size();
    while (true) {
      std::size_t child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n && less(heap_[child + 1], heap_[child])) ++child;
      if (!less(heap_[child], s)) break;
      place(i, heap_[child]);
      i = child;
    }
    place(i, s);
  }

  std::vector<Slot> heap_;
  std::vector<std::size_t> pos_;
};

}  // namespace gknn

#include "jetvar/atom.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <mutex>

#include <absl/container/flat_hash_map.h>

#include "jetvar/errors.hpp"
#include "jetvar/expression.hpp"

namespace jetvar {

namespace {

constexpr std::size_t kChunkBits = 14;
constexpr std::size_t kChunkSize = std::size_t{1} << kChunkBits;
constexpr std::size_t kMaxChunks = 4096;

struct AtomKey {
  AtomKind kind;
  std::uint32_t index;
  MultiIndex alpha;
  std::vector<Expression> args;

  friend bool operator==(const AtomKey& a, const AtomKey& b) {
    return a.kind == b.kind && a.index == b.index && a.alpha == b.alpha && a.args == b.args;
  }
};

std::size_t key_hash(const AtomKey& k) {
  std::size_t h = static_cast<std::size_t>(k.kind) * 0x9e3779b97f4a7c15ull;
  h ^= k.index + 0x9e3779b9 + (h << 6) + (h >> 2);
  h ^= k.alpha.hash() + 0x9e3779b9 + (h << 6) + (h >> 2);
  for (const auto& a : k.args) h ^= a.hash() + 0x9e3779b9 + (h << 6) + (h >> 2);
  return h;
}

struct AtomKeyHash {
  std::size_t operator()(const AtomKey& k) const { return key_hash(k); }
};

// Lock-free reads by id; interning takes the mutex.
class AtomTable {
 public:
  static AtomTable& instance() {
    static AtomTable* table = new AtomTable();
    return *table;
  }

  const AtomData& get(AtomId id) const {
    AtomData* chunk = chunks_[id >> kChunkBits].load(std::memory_order_acquire);
    return chunk[id & (kChunkSize - 1)];
  }

  std::optional<AtomId> find(const AtomKey& key) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  AtomId intern(AtomKey key) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    AtomId id = static_cast<AtomId>(count_);
    std::size_t c = count_ >> kChunkBits;
    if (c >= kMaxChunks) throw Error("atom table exhausted");
    AtomData* chunk = chunks_[c].load(std::memory_order_relaxed);
    if (!chunk) {
      chunk = new AtomData[kChunkSize];
      chunks_[c].store(chunk, std::memory_order_release);
    }
    AtomData& d = chunk[id & (kChunkSize - 1)];
    d.kind = key.kind;
    d.index = key.index;
    d.alpha = key.alpha;
    d.args = key.args;
    d.hash = key_hash(key);
    if (key.kind == AtomKind::OpaqueCall) {
      std::vector<AtomId> leaves;
      int order = 0;
      for (const auto& arg : key.args) {
        for (const auto& t : arg.terms()) {
          for (const auto& f : t.monomial) {
            const AtomData& ad = get(f.atom);
            leaves.insert(leaves.end(), ad.leaves.begin(), ad.leaves.end());
            order = std::max(order, ad.order);
          }
        }
      }
      std::sort(leaves.begin(), leaves.end());
      leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
      d.leaves = std::move(leaves);
      d.order = order;
    } else {
      d.leaves = {id};
      d.order = key.kind == AtomKind::FieldJet ? key.alpha.order() : 0;
    }
    ++count_;
    index_.emplace(std::move(key), id);
    return id;
  }

 private:
  AtomTable() {
    for (auto& c : chunks_) c.store(nullptr, std::memory_order_relaxed);
  }

  std::mutex mu_;
  std::size_t count_ = 0;
  std::array<std::atomic<AtomData*>, kMaxChunks> chunks_;
  absl::flat_hash_map<AtomKey, AtomId, AtomKeyHash> index_;
};

class FunctionTable {
 public:
  static FunctionTable& instance() {
    static FunctionTable* table = new FunctionTable();
    return *table;
  }

  FunctionId add(OpaqueFunction f) {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i = 0; i < count_; ++i) {
      const OpaqueFunction& g = *slots_[i].load(std::memory_order_relaxed);
      if (g.name == f.name && g.tags == f.tags && g.arity == f.arity) return static_cast<FunctionId>(i);
    }
    if (count_ >= slots_.size()) throw Error("function table exhausted");
    slots_[count_].store(new OpaqueFunction(std::move(f)), std::memory_order_release);
    return static_cast<FunctionId>(count_++);
  }

  std::optional<FunctionId> find(const std::string& name, const std::vector<int>& tags, int arity) {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i = 0; i < count_; ++i) {
      const OpaqueFunction& g = *slots_[i].load(std::memory_order_relaxed);
      if (g.name == name && g.tags == tags && g.arity == arity) return static_cast<FunctionId>(i);
    }
    return std::nullopt;
  }

  const OpaqueFunction& get(FunctionId id) const {
    if (id >= slots_.size()) throw UnknownAtom("function id " + std::to_string(id));
    const OpaqueFunction* f = slots_[id].load(std::memory_order_acquire);
    if (!f) throw UnknownAtom("function id " + std::to_string(id));
    return *f;
  }

 private:
  FunctionTable() {
    for (auto& s : slots_) s.store(nullptr, std::memory_order_relaxed);
  }
  std::mutex mu_;
  std::size_t count_ = 0;
  std::array<std::atomic<const OpaqueFunction*>, 4096> slots_;
};

}  // namespace

Atom Atom::base(int sigma) {
  if (sigma < 0 || sigma >= kMaxBaseDim) throw DimensionMismatch("base direction " + std::to_string(sigma));
  return Atom(AtomTable::instance().intern({AtomKind::BaseCoord, static_cast<std::uint32_t>(sigma), MultiIndex(), {}}));
}

Atom Atom::field(int component, const MultiIndex& alpha) {
  if (component < 0) throw UnknownAtom("negative field component");
  return Atom(AtomTable::instance().intern({AtomKind::FieldJet, static_cast<std::uint32_t>(component), alpha, {}}));
}

Atom Atom::param(int parameter, const MultiIndex& alpha) {
  if (parameter < 0) throw UnknownAtom("negative parameter index");
  return Atom(AtomTable::instance().intern({AtomKind::ParamJet, static_cast<std::uint32_t>(parameter), alpha, {}}));
}

Atom Atom::call(FunctionId fn, std::vector<Expression> args) {
  const OpaqueFunction& f = function(fn);
  if (static_cast<int>(args.size()) != f.arity) {
    throw DimensionMismatch(f.name + " expects " + std::to_string(f.arity) + " arguments, got " +
                            std::to_string(args.size()));
  }
  return Atom(AtomTable::instance().intern({AtomKind::OpaqueCall, fn, MultiIndex(), std::move(args)}));
}

std::optional<Atom> Atom::find_field(int component, const MultiIndex& alpha) {
  auto id = AtomTable::instance().find({AtomKind::FieldJet, static_cast<std::uint32_t>(component), alpha, {}});
  if (!id) return std::nullopt;
  return Atom(*id);
}

std::optional<Atom> Atom::find_param(int parameter, const MultiIndex& alpha) {
  auto id = AtomTable::instance().find({AtomKind::ParamJet, static_cast<std::uint32_t>(parameter), alpha, {}});
  if (!id) return std::nullopt;
  return Atom(*id);
}

const AtomData& Atom::data() const { return AtomTable::instance().get(id_); }
AtomKind Atom::kind() const { return data().kind; }
std::uint32_t Atom::index() const { return data().index; }
const MultiIndex& Atom::multi_index() const { return data().alpha; }
const std::vector<Expression>& Atom::args() const { return data().args; }
int Atom::order() const { return data().order; }
const std::vector<AtomId>& Atom::leaves() const { return data().leaves; }

std::strong_ordering atom_compare(AtomId a, AtomId b) {
  if (a == b) return std::strong_ordering::equal;
  const AtomTable& t = AtomTable::instance();
  const AtomData& x = t.get(a);
  const AtomData& y = t.get(b);
  if (auto c = x.kind <=> y.kind; c != 0) return c;
  if (auto c = x.index <=> y.index; c != 0) return c;
  if (auto c = x.alpha <=> y.alpha; c != 0) return c;
  if (auto c = x.args.size() <=> y.args.size(); c != 0) return c;
  for (std::size_t i = 0; i < x.args.size(); ++i) {
    if (auto c = x.args[i] <=> y.args[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

bool atom_less(AtomId a, AtomId b) { return atom_compare(a, b) < 0; }

std::strong_ordering operator<=>(Atom a, Atom b) { return atom_compare(a.id_, b.id_); }

std::string Atom::debug_string() const {
  const AtomData& d = data();
  switch (d.kind) {
    case AtomKind::BaseCoord:
      return "x" + std::to_string(d.index);
    case AtomKind::FieldJet:
      return "y" + std::to_string(d.index) + d.alpha.to_string();
    case AtomKind::ParamJet:
      return "xi" + std::to_string(d.index) + d.alpha.to_string();
    case AtomKind::OpaqueCall: {
      const OpaqueFunction& f = function(d.index);
      std::string s = f.name;
      for (int t : f.tags) s += "_" + std::to_string(t);
      if (!d.args.empty()) {
        s += "(";
        for (std::size_t i = 0; i < d.args.size(); ++i) {
          if (i) s += ", ";
          s += d.args[i].debug_string();
        }
        s += ")";
      }
      return s;
    }
  }
  return "?";
}

FunctionId register_function(OpaqueFunction f) { return FunctionTable::instance().add(std::move(f)); }

const OpaqueFunction& function(FunctionId id) { return FunctionTable::instance().get(id); }

std::optional<FunctionId> find_function(const std::string& name, const std::vector<int>& tags, int arity) {
  return FunctionTable::instance().find(name, tags, arity);
}

}  // namespace jetvar

#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace waveadapt {

/// Thrown when two snapshots (or spaces built on them) come from different forests.
class IncompatibleMeshError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a refinement mark names an element that is not active.
class InvalidMarkError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Coarsest partition of [a, b] into macro elements.
class MacroMesh {
public:
    explicit MacroMesh(std::vector<double> breakpoints);

    static MacroMesh uniform(double a, double b, std::size_t n);

    double a() const { return breakpoints_.front(); }
    double b() const { return breakpoints_.back(); }
    std::size_t size() const { return breakpoints_.size() - 1; }
    double left(std::size_t m) const { return breakpoints_[m]; }
    double right(std::size_t m) const { return breakpoints_[m + 1]; }
    double width(std::size_t m) const { return right(m) - left(m); }
    const std::vector<double>& breakpoints() const { return breakpoints_; }

private:
    std::vector<double> breakpoints_;
};

/// Path key of a bisection-tree node: macro element, depth, and position among
/// the 2^level nodes of that depth.
struct ElementKey {
    std::uint32_t macro = 0;
    std::uint32_t level = 0;
    std::uint64_t index = 0;

    bool operator==(const ElementKey&) const = default;

    ElementKey parent() const;
    ElementKey child(int side) const;  // 0 = left, 1 = right
    ElementKey sibling() const;
    ElementKey ancestor(std::uint32_t at_level) const;
    /// True if this node's interval contains (or equals) the other's.
    bool contains(const ElementKey& other) const;
};

/// Left-to-right order of disjoint nodes; for nested nodes the ancestor sorts first.
std::strong_ordering operator<=>(const ElementKey& lhs, const ElementKey& rhs);

struct Interval {
    double left = 0.0;
    double right = 0.0;
    double length() const { return right - left; }
};

/// Binary bisection forest over a macro mesh. Every node is addressable by its
/// key, so the forest is a value: trees are implicit and never shrink.
class Forest {
public:
    static constexpr std::uint32_t kLevelLimit = 30;

    explicit Forest(MacroMesh macro);

    const MacroMesh& macro() const { return macro_; }
    Interval interval(const ElementKey& key) const;
    double size(const ElementKey& key) const;
    /// The node at `level` whose closed interval holds x (right-continuous, last node at b).
    ElementKey locate(double x, std::uint32_t level) const;

private:
    MacroMesh macro_;
};

using ForestPtr = std::shared_ptr<const Forest>;

/// One mesh M_n: an antichain cut through the forest, stored left to right.
class MeshSnapshot {
public:
    MeshSnapshot() = default;
    MeshSnapshot(ForestPtr forest, std::vector<ElementKey> active);

    /// The macro mesh itself.
    static MeshSnapshot macro(ForestPtr forest);
    /// Every macro element bisected `level` times.
    static MeshSnapshot uniform(ForestPtr forest, std::uint32_t level);

    const ForestPtr& forest() const { return forest_; }
    std::size_t size() const { return active_.size(); }
    const std::vector<ElementKey>& elements() const { return active_; }
    const ElementKey& operator[](std::size_t i) const { return active_[i]; }

    Interval interval(std::size_t i) const { return forest_->interval(active_[i]); }
    double h(std::size_t i) const { return forest_->size(active_[i]); }
    /// Element endpoints, size() + 1 values.
    std::vector<double> nodes() const;

    /// Position of `key` in the active list, or -1.
    std::ptrdiff_t find(const ElementKey& key) const;
    bool is_active(const ElementKey& key) const { return find(key) >= 0; }
    /// Index of the active element containing x (the right one at shared nodes).
    std::size_t locate(double x) const;
    std::uint32_t max_level() const;

    bool same_forest(const MeshSnapshot& other) const { return forest_ == other.forest_; }
    bool operator==(const MeshSnapshot& other) const;

private:
    ForestPtr forest_;
    std::vector<ElementKey> active_;
};

struct RefineResult {
    MeshSnapshot mesh;
    std::vector<ElementKey> refined;  // parents that were bisected
    std::vector<ElementKey> skipped;  // marks at the depth cap
};

struct CoarsenResult {
    MeshSnapshot mesh;
    std::vector<ElementKey> coarsened;  // parents restored
    std::vector<ElementKey> skipped;    // marks that could not be merged
};

/// Bisects every marked element once. Marks deeper than `depth_max` are skipped.
RefineResult refine(const MeshSnapshot& s, std::span<const ElementKey> marked,
                    std::uint32_t depth_max = Forest::kLevelLimit);

/// Merges sibling pairs whose two members are both marked; one level per call.
CoarsenResult coarsen(const MeshSnapshot& s, std::span<const ElementKey> marked);

/// Pointwise finer of the two meshes (the space V + W).
MeshSnapshot common_refinement(const MeshSnapshot& s1, const MeshSnapshot& s2);
/// Pointwise coarser of the two meshes (the space V ∩ W).
MeshSnapshot common_coarsening(const MeshSnapshot& s1, const MeshSnapshot& s2);

/// The active element of `s` that contains the forest node `key`.
ElementKey smallest_containing_element(const MeshSnapshot& s, const ElementKey& key);

/// True if every element of `fine` is contained in an element of `coarse`.
bool refines(const MeshSnapshot& fine, const MeshSnapshot& coarse);

/// Appends `step,t,x_left,x_right,level` rows, one per element.
void write_snapshot_csv(std::ostream& os, long step, double t, const MeshSnapshot& s);

}  // namespace waveadapt

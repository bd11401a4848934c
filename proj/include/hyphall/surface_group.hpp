#pragma once
// Fundamental group of the closed orientable genus-g surface and balls in
// its word metric.  Generators are the side-pairing isometries of the
// regular 4g-gon centered at the disk origin (all interior angles 2pi/4g,
// so the translates tile the plane and the single defining relation is the
// product of commutators).  Words are reduced to ShortLex-least geodesic
// normal forms by Dehn's algorithm plus equal-length half-relator
// rewrites; that exact combinatorial machinery drives deduplication, with
// the matrix representation kept as an independent consistency guard.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyphall/geometry.hpp"

namespace hyphall {

// Letters index the symmetric generating set of size 4g.  Letter 2j is the
// j-th generator in the order a1, b1, a2, b2, ...; letter 2j+1 is its
// inverse.  ShortLex compares word length first, then letter indices.
using Word = std::vector<std::uint8_t>;

inline int inverse_letter(int letter) { return letter ^ 1; }
std::string letter_name(int letter);
std::string word_name(const Word& w);
Word word_inverse(const Word& w);
bool shortlex_less(const Word& a, const Word& b);

class SurfaceGroup {
 public:
  explicit SurfaceGroup(int genus);

  int genus() const { return genus_; }
  int alphabet_size() const { return 4 * genus_; }
  // Orbit base point: the polygon center (disk origin, i in the half-plane).
  HPoint base_point() const { return HPoint{cd(0.0, 0.0), Model::Disk}; }
  const Isometry& generator(int letter) const;
  const Word& relator() const { return relator_; }
  cd polygon_vertex(int k) const;  // disk chart, k mod 4g
  double side_length() const { return side_length_; }
  double circumradius() const { return circumradius_; }
  double inradius() const { return inradius_; }

  // Words multiply left to right: evaluate({l1,l2}) = M(l1) * M(l2).
  Isometry evaluate(const Word& w) const;
  Word free_reduce(Word w) const;
  // ShortLex-least geodesic representative.
  Word reduce(Word w) const;
  bool is_identity(const Word& w) const { return reduce(w).empty(); }
  // Exponent sums in the order a1..ag, b1..bg (size 2g).
  std::vector<int> abelianization(const Word& w) const;

 private:
  void check_word(const Word& w) const;
  // Shrinks w while it contains more than half of a relator cycle.
  Word dehn_shrink(Word w) const;

  int genus_ = 0;
  std::vector<Isometry> generators_;
  std::vector<cd> vertices_;
  Word relator_;
  std::vector<Word> relator_cycles_;  // rotations of the relator and inverse
  double side_length_ = 0.0;
  double circumradius_ = 0.0;
  double inradius_ = 0.0;
};

// Ball of a given radius in the word metric.  Elements are sorted by word
// length, then ShortLex; index 0 is the identity and indices 1..4g are the
// single letters in alphabet order, so the first |B_r| indices are exactly
// the elements of the sub-ball of radius r.  Caches matrices, base-point
// orbit coordinates (half-plane, with the vertical part computed
// multiplicatively so it stays accurate near the boundary), inverses,
// abelianization vectors, and the unit-step multiplication structure.
class Ball {
 public:
  Ball(const SurfaceGroup& group, int radius);

  const SurfaceGroup& group() const { return *group_; }
  int radius() const { return radius_; }
  int size() const { return static_cast<int>(words_.size()); }
  int size_at(int r) const;  // |B_r| for 0 <= r <= radius
  int depth(int index) const { return static_cast<int>(words_[index].size()); }
  const Word& word(int index) const { return words_[index]; }
  const Isometry& matrix(int index) const { return matrices_[index]; }
  HPoint orbit_point(int index) const;  // half-plane model
  cd orbit_disk(int index) const { return orbit_disk_[index]; }
  // Index of the element represented by w (any word), -1 if outside.
  int find(const Word& w) const;
  int inverse_index(int index) const { return inverse_[index]; }
  // index * letter; -1 if the product leaves the ball.
  int right_step(int index, int letter) const;
  // letter * index; -1 if the product leaves the ball.
  int left_step(int letter, int index) const;
  // index_a * index_b; -1 if the product leaves the ball.
  int product(int index_a, int index_b) const;
  // Pointer to 2g ints (a1..ag then b1..bg exponent sums).
  const int* abelianization(int index) const;
  // Smallest base-point displacement over nontrivial ball elements.
  double delta_min() const { return delta_min_; }

 private:
  void link(int from, int letter, int to);

  const SurfaceGroup* group_ = nullptr;
  int radius_ = 0;
  std::vector<Word> words_;
  std::vector<Isometry> matrices_;
  std::vector<double> orbit_x_, orbit_y_;
  std::vector<cd> orbit_disk_;
  std::vector<int> sizes_;
  std::vector<int> inverse_;
  std::vector<std::int32_t> neighbors_;  // size x 4g, right multiplication
  std::vector<int> abel_;                // flat, stride 2g
  std::unordered_map<std::string, int> index_of_;
  double delta_min_ = 0.0;
};

}  // namespace hyphall

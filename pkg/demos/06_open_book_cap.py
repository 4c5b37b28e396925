"""From a factored monodromy to a concave cap, one handle at a time."""

from contactkit.mcg import OpenBook, cap_pipeline, chain_relation_word, hom_rep, parse_word

base = hom_rep(parse_word("g1*g2", 1))
print(f"genus 1 chain: {base.tolist()}, order {base.order()}")
for g in (1, 2, 3):
    w = chain_relation_word(g)
    print(f"genus {g}: chain relation word has {len(w)} letters, acts trivially: {hom_rep(w).is_identity()}")

for g, word in [(1, "c^2*s1^-1"), (2, "c*s1^-1*s2^-1")]:
    p = cap_pipeline(OpenBook.parse(g, word))
    print(f"\ngenus {g}, monodromy {word}")
    print(p.table())
    print(f"stage 3 handles: computed {p.stage3_computed}, commonly quoted {p.stage3_stated}")

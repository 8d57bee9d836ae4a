#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <string>

#include "helpers.hpp"
#include "strainsim/strainsim.hpp"

using namespace strainsim;

TEST_CASE("sha256 matches the standard test vectors") {
    detail::Sha256 empty;
    CHECK(to_hex(empty.finish().data(), 32) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    detail::Sha256 abc;
    abc.update("abc", 3);
    CHECK(to_hex(abc.finish().data(), 32) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    detail::Sha256 two_blocks;
    const std::string msg = "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq";
    two_blocks.update(msg.data(), msg.size());
    CHECK(to_hex(two_blocks.finish().data(), 32) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");

    // split updates hash the same as one call
    detail::Sha256 split;
    split.update(msg.data(), 10);
    split.update(msg.data() + 10, msg.size() - 10);
    detail::Sha256 whole;
    whole.update(msg.data(), msg.size());
    CHECK(split.finish() == whole.finish());
}

TEST_CASE("canonical_hash of the empty map is fixed across runs") {
    std::map<std::string, Bytes> empty;
    ContentHash h1 = canonical_hash(empty);
    ContentHash h2 = canonical_hash(empty);
    CHECK(h1 == h2);
    // frozen: canonical form of an empty map is a single zero u64
    CHECK(h1.hex() == "af5570f5a1810b7af78caf4bc70a660f0df51e42baf91d4de5b2328de0e83dfc");
}

TEST_CASE("canonical_hash is pure over genomes built twice from the same literals") {
    auto build = [] {
        GenomeDraft d;
        d.package_name = "app.x";
        d.display_name = "x";
        d.icon_id = "i";
        d.sources.push_back({"main", SourceUnit{{1, 2, 3}, {"r"}}});
        d.resources.push_back({"r", Bytes{9, 9}});
        d.traits = {"a", "b"};
        return make_genome(std::move(d));
    };
    CHECK(build().strain_id == build().strain_id);
}

TEST_CASE("1000 random genomes hash pairwise distinct") {
    RngStream rng(1234, "hash_distinct");
    std::set<ContentHash> seen;
    for (int i = 0; i < 1000; ++i) {
        Genome g = testutil::random_genome(rng);
        CHECK(seen.insert(g.strain_id).second);
    }
    CHECK(seen.size() == 1000);
}

TEST_CASE("flipping any single content byte changes the genome hash") {
    RngStream rng(99, "avalanche");
    Genome base = testutil::random_genome(rng);
    REQUIRE(!base.sources.empty());

    int checked = 0;
    while (checked < 100) {
        Genome edited = base;
        auto it = edited.sources.begin();
        std::advance(it, static_cast<long>(rng.next_below(edited.sources.size())));
        Bytes& content = it->second.content;
        const std::size_t pos = rng.next_below(content.size());
        const std::uint8_t flip = static_cast<std::uint8_t>(1 + rng.next_below(255));
        content[pos] = static_cast<std::uint8_t>(content[pos] ^ flip);
        CHECK(derive_strain_id(edited) != base.strain_id);
        ++checked;
    }
}

TEST_CASE("strain id derivation") {
    RngStream rng(7, "strain_id");
    Genome g = testutil::random_genome(rng);

    SECTION("identical content, identical id") {
        Genome copy = g;
        CHECK(derive_strain_id(copy) == g.strain_id);
    }
    SECTION("display rename changes the id") {
        Genome other = g;
        other.display_name += "_renamed";
        CHECK(derive_strain_id(other) != g.strain_id);
    }
    SECTION("lineage fields do not feed identity") {
        Genome other = g;
        other.parent_strain = g.strain_id;
        CHECK(derive_strain_id(other) == g.strain_id);
    }
    SECTION("child differing in one trait has a distinct id and records its parent") {
        Genome child = mutate(g, {MutationOp::add_trait("fresh_trait")});
        CHECK(child.strain_id != g.strain_id);
        REQUIRE(child.parent_strain.has_value());
        CHECK(*child.parent_strain == g.strain_id);
    }
}

TEST_CASE("hex round trip") {
    RngStream rng(5, "hex");
    Genome g = testutil::random_genome(rng);
    CHECK(ContentHash::from_hex(g.strain_id.hex()) == g.strain_id);
    CHECK_THROWS(ContentHash::from_hex("zz"));
}

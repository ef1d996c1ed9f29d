#include <catch2/catch_amalgamated.hpp>

#include "campo/core/dataset.hpp"
#include "campo/core/types.hpp"
#include "campo/core/world.hpp"

using namespace campo;

namespace {

Vec vec2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

WorldMap empty_map() {
    WorldMap map;
    map.bounds_min = vec2(-100, -100);
    map.bounds_max = vec2(100, 100);
    map.goal = GoalRegion{vec2(90, 90), 1.0};
    map.start = vec2(0, 0);
    return map;
}

ActionVec action1(double u, double dt = 1.0) {
    Vec c(1);
    c << u;
    return ActionVec(c, dt);
}

}  // namespace

TEST_CASE("state_distance is the Euclidean metric") {
    CHECK(state_distance(vec2(0, 0), vec2(3, 4)) == Catch::Approx(5.0));
    CHECK(state_distance(vec2(1, 1), vec2(1, 1)) == 0.0);
    CHECK(state_distance(vec2(1, 1), vec2(2, 2)) == Catch::Approx(std::sqrt(2.0)));
    Vec bad(3);
    bad << 0, 0, 0;
    CHECK_THROWS_AS(state_distance(vec2(0, 0), bad), std::invalid_argument);
}

TEST_CASE("state_distance satisfies the triangle inequality", "[property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-50.0, 50.0);
    for (int i = 0; i < 10000; ++i) {
        Vec a = vec2(unif(rng), unif(rng));
        Vec b = vec2(unif(rng), unif(rng));
        Vec c = vec2(unif(rng), unif(rng));
        REQUIRE(state_distance(a, c) <= state_distance(a, b) + state_distance(b, c) + 1e-12);
    }
}

TEST_CASE("collision checking on segments") {
    SECTION("empty map is collision free") {
        WorldMap map = empty_map();
        CHECK_FALSE(exists_collision(vec2(0, 0), action1(0), vec2(1, 0), map));
    }
    SECTION("segment through a rectangle collides") {
        WorldMap map = empty_map();
        map.obstacles.push_back(BoxObstacle{vec2(4, -1), vec2(6, 1)});
        CHECK(exists_collision(vec2(0, 0), action1(0), vec2(10, 0), map));
    }
    SECTION("segment passing a distant circle stays free") {
        // Minimum segment-circle distance is 3 > radius 1.
        WorldMap map = empty_map();
        map.obstacles.push_back(BallObstacle{vec2(5, 3), 1.0});
        CHECK_FALSE(exists_collision(vec2(0, 0), action1(0), vec2(10, 0), map));
    }
    SECTION("leaving the bounds collides") {
        WorldMap map = empty_map();
        CHECK(exists_collision(vec2(0, 0), action1(0), vec2(150, 0), map));
    }
    SECTION("a free state does not collide with itself") {
        WorldMap map = empty_map();
        map.obstacles.push_back(BallObstacle{vec2(5, 3), 1.0});
        std::mt19937_64 rng(3);
        for (int i = 0; i < 200; ++i) {
            StateVec s = map.sample_uniform(rng);
            if (map.point_collides(s)) continue;
            REQUIRE_FALSE(exists_collision(s, action1(0), s, map));
        }
    }
    SECTION("collision radius inflates obstacles") {
        WorldMap map = empty_map();
        map.obstacles.push_back(BallObstacle{vec2(5, 3), 1.0});
        map.collision_radius = 2.5;
        CHECK(exists_collision(vec2(0, 0), action1(0), vec2(10, 0), map));
    }
}

TEST_CASE("reward covers exactly the three transition cases") {
    WorldMap map = empty_map();
    RewardSpec spec(-1, -10, 100, 0.99);
    ActionVec a = action1(0);
    CHECK(reward(vec2(0, 0), a, ObstacleToken{}, spec, map) == -10.0);
    CHECK(reward(vec2(0, 0), a, vec2(90, 90.5), spec, map) == 100.0);
    CHECK(reward(vec2(0, 0), a, vec2(10, 10), spec, map) == -1.0);
}

TEST_CASE("reward spec validation") {
    CHECK_THROWS_AS(RewardSpec(-10, -1, 100, 0.99), std::invalid_argument);
    CHECK_THROWS_AS(RewardSpec(-1, -10, 100, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(RewardSpec(-1, -10, -100, 0.5), std::invalid_argument);
}

TEST_CASE("action metric scales duration by the maximum") {
    ActionVec a = action1(0.0, 1.0);
    ActionVec b = action1(0.0, 3.0);
    CHECK(action_metric(a, b, 3.0) == Catch::Approx(2.0 / 3.0));
    CHECK(action_metric(a, a, 3.0) == 0.0);
}

TEST_CASE("action space sampling and clamping") {
    Vec lo(2), hi(2);
    lo << 0, -1;
    hi << 6.28, 1;
    ActionSpace space(lo, hi, 0.05, 3.0);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        ActionVec a = space.sample_uniform(rng);
        REQUIRE(space.contains(a));
    }
    ActionVec wild(vec2(10, -4), 7.0);
    ActionVec clamped = space.clamp(wild);
    CHECK(space.contains(clamped));
    CHECK(clamped.duration == 3.0);
    CHECK_THROWS_AS(ActionSpace(lo, hi, 0.0, 3.0), std::invalid_argument);
}

TEST_CASE("dataset CSV round-trips within printed precision") {
    Dataset data;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        DatasetRecord rec;
        rec.action = ActionVec(vec2(unif(rng), unif(rng)), 0.05 + std::abs(unif(rng)));
        rec.delta = vec2(unif(rng), unif(rng));
        data.push_back(std::move(rec));
    }
    const std::string path = "test_core_dataset.csv";
    save_dataset_csv(data, path);
    Dataset loaded = load_dataset_csv(path);
    REQUIRE(loaded.size() == data.size());
    REQUIRE(loaded.control_dim == 2);
    REQUIRE(loaded.state_dim == 2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK((loaded.records[i].delta - data.records[i].delta).norm() < 1e-12);
        CHECK((loaded.records[i].action.control - data.records[i].action.control).norm() < 1e-12);
        CHECK(loaded.records[i].action.duration ==
              Catch::Approx(data.records[i].action.duration).margin(1e-12));
    }
    std::remove(path.c_str());
}

TEST_CASE("dataset header validation") {
    const std::string path = "test_core_bad.csv";
    {
        std::ofstream out(path);
        out << "a,b,c\n1,2,3\n";
    }
    CHECK_THROWS_AS(load_dataset_csv(path), std::runtime_error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_dataset_csv("does_not_exist.csv"), std::runtime_error);
}

TEST_CASE("displacement quantile") {
    Dataset data;
    for (int i = 1; i <= 100; ++i) {
        DatasetRecord rec;
        rec.action = action1(0.0);
        rec.delta = vec2(static_cast<double>(i), 0.0);
        data.push_back(std::move(rec));
    }
    CHECK(data.displacement_quantile(1.0) == 100.0);
    CHECK(data.displacement_quantile(0.0) == 1.0);
    CHECK(data.displacement_quantile(0.99) == Catch::Approx(99.0).margin(1.0));
}

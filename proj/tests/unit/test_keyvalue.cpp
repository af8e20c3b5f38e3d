#include <gtest/gtest.h>

#include "honeypot/keyvalue.hpp"

using honeypot::ConfigError;
using honeypot::KeyValueFile;

TEST(KeyValue, ParsesCommentsRepeatsAndWhitespace) {
    const auto kv = KeyValueFile::parse("# header\n a = 1 \nb=two words # trailing\n\nstep = 1 2 3\nstep = 4 5 6\n");
    EXPECT_EQ(kv.get("a"), "1");
    EXPECT_EQ(kv.get("b"), "two words");
    EXPECT_EQ(kv.get_all("step"), (std::vector<std::string>{"1 2 3", "4 5 6"}));
    EXPECT_EQ(kv.get("step"), "4 5 6");
    EXPECT_FALSE(kv.contains("c"));
    EXPECT_THROW(kv.get("c"), ConfigError);
    EXPECT_DOUBLE_EQ(kv.get_double("c", 2.5), 2.5);
    EXPECT_EQ(kv.get_int("a"), 1);
}

TEST(KeyValue, RejectsMalformedLines) {
    EXPECT_THROW(KeyValueFile::parse("no equals sign\n"), ConfigError);
    EXPECT_THROW(KeyValueFile::parse(" = value\n"), ConfigError);
    const auto kv = KeyValueFile::parse("x = abc\n");
    EXPECT_THROW(kv.get_double("x"), ConfigError);
    EXPECT_THROW(kv.get_int("x"), ConfigError);
}

TEST(KeyValue, FormatRoundTrips) {
    KeyValueFile kv;
    kv.add("lookback", "200");
    kv.add("model.U0", "model_U0.edl");
    kv.add("step", "1 2 3");
    kv.add("step", "4 5 6");
    const auto back = KeyValueFile::parse(kv.format());
    EXPECT_EQ(back.entries(), kv.entries());
}

TEST(KeyValue, ParseDoubleIsStrict) {
    EXPECT_DOUBLE_EQ(honeypot::parse_double("1e-3"), 1e-3);
    EXPECT_DOUBLE_EQ(honeypot::parse_double("-0.5"), -0.5);
    EXPECT_THROW(honeypot::parse_double("1.5x"), std::exception);
    EXPECT_THROW(honeypot::parse_double(""), std::exception);
}

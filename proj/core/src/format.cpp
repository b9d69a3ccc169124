#include "l96da/format.hpp"

#include <array>
#include <charconv>
#include <stdexcept>

namespace l96da {

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf.data(), end);
}

}  // namespace l96da

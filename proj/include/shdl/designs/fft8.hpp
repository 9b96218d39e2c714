#pragma once

// 8-point radix-2 decimation-in-time FFT on complex integers.
//
// Words are 64 bits: real part in [63:32], imaginary part in [31:0], both
// 32-bit two's complement. Twiddles are Q14 constants (16384 = 1.0) rounded
// symmetrically, so W^(m+2) is exactly W^m rotated by -90 degrees.
//
//   load      8 words from FIFO fin into BRAM X0 at bit-reversed addresses
//   stage0-2  4 butterflies each, 4 cycles per butterfly, ping-pong between
//             X0 and X1. Stages 0 and 1 only use twiddles 1 and -j, where
//             multiply-then-shift by 14 is exact. Stage 2 keeps the 2^14
//             scale of its products.
//   out       X1 scaled down by 2^14 (arithmetic shift, i.e. floor) into
//             FIFO fout
//
// Output k is therefore floor(sum_n x[n] * Wq[nk mod 8] / 2^14) per
// component, with Wq the quantized twiddle table. 72 cycles when the FIFOs
// keep up.

#include <array>
#include <cmath>
#include <cstdint>

#include "shdl/builder.hpp"
#include "shdl/interfaces.hpp"

namespace shdl::designs {

inline constexpr unsigned kFftPoints = 8;
inline constexpr unsigned kTwiddleShift = 14;

// Q14 twiddle W^m = exp(-2*pi*i*m/8), as (re, im).
inline std::array<std::int64_t, 2> fft8_twiddle(unsigned m) {
  const double pi = std::acos(-1.0);
  auto q = [](double v) { return static_cast<std::int64_t>(std::llround(v * (1 << kTwiddleShift))); };
  return {q(std::cos(2 * pi * m / kFftPoints)), q(-std::sin(2 * pi * m / kFftPoints))};
}

inline unsigned fft8_bitrev(unsigned n) { return ((n & 1) << 2) | (n & 2) | ((n >> 2) & 1); }

inline std::uint64_t fft8_pack(std::int64_t re, std::int64_t im) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(re)) << 32) | static_cast<std::uint32_t>(im);
}

inline std::int64_t fft8_re(std::uint64_t w) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(w >> 32)); }
inline std::int64_t fft8_im(std::uint64_t w) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(w)); }

namespace detail {

// Arithmetic right shift of a 32-bit two's complement value.
inline Expr asr32(const Expr& x, unsigned k) {
  constexpr std::uint64_t sign = 0x80000000u;
  return ((x ^ constant(32, sign)) >> constant(32, k)) - constant(32, sign >> k);
}

inline Expr pack64(const Expr& re, const Expr& im) {
  return (zext(re, 64) << constant(64, 32)) | zext(im, 64);
}

inline std::uint64_t u32(std::int64_t v) { return static_cast<std::uint32_t>(v); }

}  // namespace detail

inline ModulePtr build_fft8() {
  using detail::asr32;
  using detail::pack64;
  using detail::u32;

  ModuleBuilder mod("fft8");
  Fifo fin = input_fifo("fin", 64);
  Fifo fout = output_fifo("fout", 64);
  Bram x0("X0", 64, kFftPoints);
  Bram x1("X1", 64, kFftPoints);

  auto ta = reg("ta", 64);
  auto hb = reg("hb", 64);
  auto br = var("br", 32);
  auto bi = var("bi", 32);
  auto pr = var("pr", 32);
  auto pi = var("pi", 32);
  auto tr = var("tr", 32);
  auto ti = var("ti", 32);

  {
    ForLoopSection load("load", "n", 0, kFftPoints);
    LeafSection l("load_word");
    std::array<std::uint64_t, kFftPoints> rev{};
    for (unsigned k = 0; k < kFftPoints; ++k) rev[k] = fft8_bitrev(k);
    x0.write_data(lookup(load.var(), rev, 4), fin.read());
  }

  const Bram* src[3] = {&x0, &x1, &x0};
  const Bram* dst[3] = {&x1, &x0, &x1};
  for (unsigned s = 0; s < 3; ++s) {
    const unsigned h = 1u << s;
    std::array<std::uint64_t, 4> top{}, bot{}, wr{}, wi{};
    for (unsigned b = 0; b < 4; ++b) {
      unsigned group = b / h, pos = b % h;
      top[b] = group * 2 * h + pos;
      bot[b] = top[b] + h;
      auto w = fft8_twiddle(pos * (kFftPoints / (2 * h)));
      wr[b] = u32(w[0]);
      wi[b] = u32(w[1]);
    }
    const std::string tag = std::to_string(s);
    ForLoopSection stage("stage" + tag, "b" + tag, 0, 4);
    Expr top_addr = lookup(stage.var(), top, 4);
    Expr bot_addr = lookup(stage.var(), bot, 4);
    {
      LeafSection l("rd_top" + tag);
      src[s]->read(top_addr);
    }
    {
      LeafSection l("rd_bot" + tag);
      src[s]->read(bot_addr);
      assign(ta, src[s]->data());
    }
    {
      LeafSection l("wr_top" + tag);
      Expr w_re = lookup(stage.var(), wr, 32);
      Expr w_im = lookup(stage.var(), wi, 32);
      assign(br, src[s]->data() >> 32);
      assign(bi, src[s]->data());
      assign(pr, w_re * br - w_im * bi);
      assign(pi, w_re * bi + w_im * br);
      assign(tr, ta >> 32);
      assign(ti, ta);
      if (s < 2) {
        assign(pr, asr32(pr, kTwiddleShift));
        assign(pi, asr32(pi, kTwiddleShift));
      } else {
        assign(tr, tr << kTwiddleShift);
        assign(ti, ti << kTwiddleShift);
      }
      dst[s]->write_data(top_addr, pack64(tr + pr, ti + pi));
      assign(hb, pack64(tr - pr, ti - pi));
    }
    {
      LeafSection l("wr_bot" + tag);
      dst[s]->write_data(bot_addr, hb);
    }
  }

  {
    ForLoopSection out("out", "o", 0, kFftPoints);
    {
      LeafSection l("out_issue");
      x1.read(out.var());
    }
    {
      LeafSection l("out_send");
      assign(br, x1.data() >> 32);
      assign(bi, x1.data());
      Expr word = pack64(asr32(br, kTwiddleShift), asr32(bi, kTwiddleShift));
      fout.write(word);
      display("X[%d] = %x", out.var(), word);
    }
  }
  return mod.finish();
}

}  // namespace shdl::designs

#pragma once

// Hand-built 7x7 positions for pass-alive checks: two-eyed groups, shared
// eyes, false eyes, big eyes with and without opponent stones, one-eyed
// groups and boards where one side owns everything.

#include <string>
#include <vector>

namespace testutil {

inline const std::vector<std::vector<std::string>>& benson_suite_7x7() {
  static const std::vector<std::vector<std::string>> suite{
      {".X.XO.O", "XXXXOOO", "OOOOO.O", "OOOOOOO", "XXXXXXX", "X.X.X.X", "XXXXXXX"},
      {".X.XOOO", "XXXXO.O", "OOOOOOO", "OOOOOOO", "XXXXXXX", "X.X.X.X", "XXXXXXX"},
      {"X.XOOOO", ".XXO.OO", "XXOOOOO", "OOOO.OO", "OOOOOOO", "XXXXXXX", "X.X.X.X"},
      {"XXXXXXX", "X.XOOOO", "XXXO.O.", "XXXOOOO", "OOOOXXX", ".O.OX.X", "OOOOXXX"},
      {".XOOOOO", "XXO.O.O", "XXOOOOO", "XXXXXXX", "X.XO.XX", "XXXXXXX", "X.X.X.X"},
      {"XXXXXOO", "X...XO.", "X...XOO", "X...XO.", "XXXXXOO", "XX.XXOO", "OOOOOOO"},
      {"..XOO.O", "XXXO.OO", "OOOOOOO", "OOOOOOO", "XXXXXXX", "X..XX.X", "XXXXXXX"},
      {"X.XOOOO", "XXXO.O.", ".XXOOOO", "XXXOOOO", "XXXXXXX", "XO.XXX.", "XXXXXX."},
      {".X.O.O.", "XXXOOOO", "XXXXXXX", ".X.X.X.", "XXXXXXX", "OOOOOOO", ".O.O.O."},
      {".X.XOOO", "X.XXO.O", "XXXXOOO", "XXXXO.O", "OOOOOOO", "OOOOOOO", "O.O.O.O"},
      {"X.X.X.X", "XXXXXXX", "OOOOOOO", "O.O.OO.", "OOOOOOO", "XXXXXXX", "X.X.X.X"},
      {"..XOO..", "XXXOOOO", "XXXXXXX", ".X.XOOO", "XXXXO..", "OOOOO.O", ".O.OOOO"},
      {"XXXXXXX", "XO.OX.X", "XOOOXXX", "X.X.XOO", "XXXXXO.", "OOOOOO.", ".O.O.OO"},
      {".XO.O..", "XXOOOOO", "XXXXXXX", "X.X.XOO", "XXXXXO.", "OOOOOOO", "O.O.O.O"},
      {"X.XO.OX", "XXXOOOX", "X.XO.OX", "XXXOOOX", "XXXXXXX", "OOOOOOO", "O.O.O.O"},
      {"XX.XXOO", "X.X.XO.", "XXXXXOO", "OOOOOOO", "O.O.O.O", "OOOOOOO", "X.X.X.X"},
      {".X.XOO.", "XXXXO.O", "OOOO.OO", "OXXOOOO", "OX.XOOO", "OOXXO.O", "O.OOOOO"},
      {".XOOOO.", "X.XOOOO", "XXXOO.O", "OOOOOOO", "XXXXXXX", "XOOOOOX", "X.X.X.X"},
      {"XXXXXXX", "X.O.O.X", "XXXXXXX", "OOOOOOO", "O.O.O.O", "OOOOOOO", ".O.O.O."},
      {".X.X.XO", "XXXXXXO", "OOOOOOO", "OXXXXXO", "OX.X.XO", "OXXXXXO", "O.OOO.O"},
      {".OX.XO.", "OOXXXOO", "XXX.XXX", "XX.X.XX", "OOXXXOO", ".OXOX.O", "OOX.XOO"},
      {"X.X.OOO", "XXXXO.O", "XOOOOOO", "XO.OXXX", "XOOOX.X", "XXXXX.X", "X.X.XXX"},
      {".X.X.X.", "X.X.X.X", "XXXXXXX", "OOOOOOO", "O.OO.OO", ".O..O.O", "OOOOOOO"},
      {"..XOOOO", "XXXO.O.", "XXXOOOO", "XXXXXXX", "XX.OXXX", "X.OO.XX", "XXXXXXX"},
      {".XXXXX.", "XX.X.XX", "OOOOOOO", "O..O..O", "OOOOOOO", "XXXXXXX", "X.X.X.X"},
      {"O.OXXXX", "OOOX.XX", "XXXXXX.", ".X.XOOO", "XXXXO.O", "OOOOOOO", ".O.O.O."},
  };
  return suite;
}

}  // namespace testutil

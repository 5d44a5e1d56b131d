#include "tree.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace testutil {

namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> collect(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && it->path().filename() == "logs") {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    std::ifstream in(it->path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(it->path(), root).generic_string()] = s.str();
  }
  return files;
}

}  // namespace

std::vector<std::string> diff_trees(const fs::path& a, const fs::path& b) {
  const auto fa = collect(a);
  const auto fb = collect(b);
  std::vector<std::string> out;
  for (const auto& [name, bytes] : fa) {
    const auto it = fb.find(name);
    if (it == fb.end()) {
      out.push_back("only in first: " + name);
    } else if (it->second != bytes) {
      out.push_back("differs: " + name);
    }
  }
  for (const auto& [name, bytes] : fb) {
    if (fa.count(name) == 0) out.push_back("only in second: " + name);
  }
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace testutil

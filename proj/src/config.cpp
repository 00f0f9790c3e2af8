#include "gridform/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <sstream>

namespace gridform {

CaseParams parse_config(std::string_view text, CaseParams base) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        std::ostringstream msg;
        msg << "config line " << e.line() << ": " << e.message();
        throw ConfigError(msg.str());
    }
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            if (node.data().empty()) continue;  // section without keys
            set_parameter(base, name, node.data());
            continue;
        }
        for (const auto& [key, value] : node) {
            set_parameter(base, name + "." + key, value.data());
        }
    }
    validate(base);
    return base;
}

CaseParams load_config(const std::string& path, CaseParams base) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str(), base);
}

}  // namespace gridform

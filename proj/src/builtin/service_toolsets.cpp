// In-memory stand-ins for the Notion and monday.com MCP servers. State lives
// for the lifetime of the toolset and starts from a fixed seed workspace, so
// runs against them are reproducible.

#include <algorithm>
#include <mutex>
#include <stdexcept>

#include "splitcall/builtin_toolsets.hpp"
#include "splitcall/error.hpp"
#include "splitcall/sandbox.hpp"

namespace splitcall::detail {

namespace {

json str_prop(const std::string& what) {
    return json{{"type", "string"}, {"description", what}};
}

class ServiceToolset : public Toolset {
public:
    ToolResult call(const ToolSpec& spec, const json& args, const SandboxPolicy& policy) override {
        return run_inline(
            [&] {
                std::lock_guard lock(mutex_);
                return handle(spec.name, args).dump(2);
            },
            policy);
    }

protected:
    virtual json handle(const std::string& tool, const json& args) = 0;

    std::string next_id(const std::string& prefix) { return prefix + "-" + std::to_string(++counter_); }

    static json& find_by_id(json& items, const std::string& id, const char* what) {
        for (auto& item : items) {
            if (item.at("id") == id) {
                return item;
            }
        }
        throw std::runtime_error(std::string(what) + " not found: " + id);
    }

private:
    std::mutex mutex_;
    int counter_ = 100;
};

class NotionToolset : public ServiceToolset {
public:
    NotionToolset() {
        pages_ = json::array({
            {{"id", "page-1"}, {"title", "Product Roadmap"}, {"parent_id", "workspace"},
             {"content", json::array({"Q3: ship offline mode", "Q4: usage analytics"})}, {"comments", json::array()}},
            {{"id", "page-2"}, {"title", "Meeting Notes 2024-09-12"}, {"parent_id", "page-1"},
             {"content", json::array({"Decided to freeze the API on Friday"})}, {"comments", json::array()}},
            {{"id", "page-3"}, {"title", "Onboarding Guide"}, {"parent_id", "workspace"},
             {"content", json::array({"Request laptop", "Read the handbook"})}, {"comments", json::array()}},
        });
        databases_ = json::array({
            {{"id", "db-tasks"}, {"title", "Tasks"},
             {"entries", json::array({
                  {{"id", "entry-1"}, {"properties", {{"Name", "Write release notes"}, {"Status", "In progress"}}}},
                  {{"id", "entry-2"}, {"properties", {{"Name", "Fix login bug"}, {"Status", "Done"}}}},
              })}},
        });
        users_ = json::array({{{"id", "user-1"}, {"name", "Ada Park"}}, {{"id", "user-2"}, {"name", "Lin Osei"}}});
    }

    std::vector<ToolSpec> tools() override {
        return {
            make_spec("search_pages", "Search pages in the Notion workspace by a text query over titles and content.",
                      object_schema({{"query", str_prop("Text to search for")}}, {"query"})),
            make_spec("get_page", "Fetch one Notion page with its title, parent, content blocks and comments.",
                      object_schema({{"page_id", str_prop("Page id")}}, {"page_id"})),
            make_spec("create_page", "Create a new Notion page under a parent page (or the workspace root).",
                      object_schema({{"title", str_prop("Page title")},
                                     {"parent_id", str_prop("Parent page id; defaults to workspace")},
                                     {"content", str_prop("Initial paragraph text")}},
                                    {"title"})),
            make_spec("update_page", "Change the title of a Notion page or replace its content.",
                      object_schema({{"page_id", str_prop("Page id")},
                                     {"title", str_prop("New title")},
                                     {"content", str_prop("Replacement paragraph text")}},
                                    {"page_id"})),
            make_spec("append_block", "Append a paragraph block to the end of a Notion page.",
                      object_schema({{"page_id", str_prop("Page id")}, {"text", str_prop("Paragraph text")}},
                                    {"page_id", "text"})),
            make_spec("query_database",
                      "Query a Notion database, optionally filtering entries where a property equals a value.",
                      object_schema({{"database_id", str_prop("Database id")},
                                     {"filter_property", str_prop("Property name to filter on")},
                                     {"filter_value", str_prop("Required property value")}},
                                    {"database_id"})),
            make_spec("create_database_entry", "Add an entry with the given properties to a Notion database.",
                      object_schema({{"database_id", str_prop("Database id")},
                                     {"properties", {{"type", "object"}, {"additionalProperties", {{"type", "string"}}}}}},
                                    {"database_id", "properties"})),
            make_spec("list_users", "List the members of the Notion workspace.", object_schema(json::object(), {})),
            make_spec("add_comment", "Add a comment to a Notion page.",
                      object_schema({{"page_id", str_prop("Page id")}, {"text", str_prop("Comment text")}},
                                    {"page_id", "text"})),
        };
    }

    std::string description() const override {
        return "Notion knowledge base: search, read, create and edit pages, query databases, comment.";
    }

protected:
    json handle(const std::string& tool, const json& args) override {
        if (tool == "search_pages") {
            auto needle = to_lower(args.at("query").get<std::string>());
            json hits = json::array();
            for (const auto& page : pages_) {
                auto haystack = to_lower(page["title"].get<std::string>() + " " + page["content"].dump());
                if (haystack.find(needle) != std::string::npos) {
                    hits.push_back({{"id", page["id"]}, {"title", page["title"]}});
                }
            }
            return {{"results", hits}};
        }
        if (tool == "get_page") {
            return find_by_id(pages_, args.at("page_id").get<std::string>(), "page");
        }
        if (tool == "create_page") {
            auto parent = args.value("parent_id", std::string("workspace"));
            if (parent != "workspace") {
                find_by_id(pages_, parent, "parent page");
            }
            json page{{"id", next_id("page")}, {"title", args.at("title")}, {"parent_id", parent},
                      {"content", json::array()}, {"comments", json::array()}};
            if (args.contains("content")) {
                page["content"].push_back(args["content"]);
            }
            pages_.push_back(page);
            return page;
        }
        if (tool == "update_page") {
            auto& page = find_by_id(pages_, args.at("page_id").get<std::string>(), "page");
            if (args.contains("title")) page["title"] = args["title"];
            if (args.contains("content")) page["content"] = json::array({args["content"]});
            return page;
        }
        if (tool == "append_block") {
            auto& page = find_by_id(pages_, args.at("page_id").get<std::string>(), "page");
            page["content"].push_back(args.at("text"));
            return {{"id", page["id"]}, {"blocks", page["content"].size()}};
        }
        if (tool == "query_database") {
            auto& db = find_by_id(databases_, args.at("database_id").get<std::string>(), "database");
            json rows = json::array();
            for (const auto& entry : db["entries"]) {
                if (args.contains("filter_property")) {
                    auto key = args["filter_property"].get<std::string>();
                    auto want = args.value("filter_value", std::string{});
                    if (!entry["properties"].contains(key) || entry["properties"][key] != want) {
                        continue;
                    }
                }
                rows.push_back(entry);
            }
            return {{"database", db["title"]}, {"entries", rows}};
        }
        if (tool == "create_database_entry") {
            auto& db = find_by_id(databases_, args.at("database_id").get<std::string>(), "database");
            json entry{{"id", next_id("entry")}, {"properties", args.at("properties")}};
            db["entries"].push_back(entry);
            return entry;
        }
        if (tool == "list_users") {
            return {{"users", users_}};
        }
        if (tool == "add_comment") {
            auto& page = find_by_id(pages_, args.at("page_id").get<std::string>(), "page");
            json comment{{"id", next_id("comment")}, {"text", args.at("text")}};
            page["comments"].push_back(comment);
            return comment;
        }
        throw Error(Errc::unknown_tool, "unknown tool: notion/" + tool);
    }

private:
    json pages_;
    json databases_;
    json users_;
};

class MondayToolset : public ServiceToolset {
public:
    MondayToolset() {
        boards_ = json::array({
            {{"id", "board-1"}, {"name", "Website Relaunch"}, {"kind", "public"},
             {"groups", json::array({"backlog", "this_week", "done"})}},
            {{"id", "board-2"}, {"name", "Hiring"}, {"kind", "private"},
             {"groups", json::array({"open", "interviewing", "closed"})}},
        });
        items_ = json::array({
            {{"id", "item-1"}, {"board_id", "board-1"}, {"name", "Design homepage"}, {"group_id", "this_week"},
             {"status", "Working on it"}, {"updates", json::array()}},
            {{"id", "item-2"}, {"board_id", "board-1"}, {"name", "Migrate blog"}, {"group_id", "backlog"},
             {"status", "Not started"}, {"updates", json::array()}},
            {{"id", "item-3"}, {"board_id", "board-2"}, {"name", "Backend engineer"}, {"group_id", "interviewing"},
             {"status", "Stuck"}, {"updates", json::array()}},
        });
        users_ = json::array({{{"id", "u-1"}, {"name", "Sam Rivera"}}, {{"id", "u-2"}, {"name", "Noor Haddad"}}});
    }

    std::vector<ToolSpec> tools() override {
        const json status{{"type", "string"}, {"enum", {"Not started", "Working on it", "Stuck", "Done"}}};
        return {
            make_spec("list_boards", "List all monday.com boards with their groups.", object_schema(json::object(), {})),
            make_spec("get_board_items", "List the items on a monday.com board with group and status.",
                      object_schema({{"board_id", str_prop("Board id")}}, {"board_id"})),
            make_spec("get_item", "Fetch one monday.com item including its updates.",
                      object_schema({{"item_id", str_prop("Item id")}}, {"item_id"})),
            make_spec("create_item", "Create an item on a monday.com board, optionally in a specific group.",
                      object_schema({{"board_id", str_prop("Board id")},
                                     {"name", str_prop("Item name")},
                                     {"group_id", str_prop("Group id; defaults to the first group")}},
                                    {"board_id", "name"})),
            make_spec("update_item_status", "Set the status column of a monday.com item.",
                      object_schema({{"item_id", str_prop("Item id")}, {"status", status}}, {"item_id", "status"})),
            make_spec("create_update", "Post an update (comment) on a monday.com item.",
                      object_schema({{"item_id", str_prop("Item id")}, {"body", str_prop("Update text")}},
                                    {"item_id", "body"})),
            make_spec("move_item_to_group", "Move a monday.com item to another group on its board.",
                      object_schema({{"item_id", str_prop("Item id")}, {"group_id", str_prop("Target group id")}},
                                    {"item_id", "group_id"})),
            make_spec("create_board", "Create a new monday.com board.",
                      object_schema({{"name", str_prop("Board name")},
                                     {"kind", {{"type", "string"}, {"enum", {"public", "private"}}}}},
                                    {"name"})),
            make_spec("list_users", "List the users of the monday.com account.", object_schema(json::object(), {})),
        };
    }

    std::string description() const override {
        return "monday.com project management: boards, items, statuses, groups and updates.";
    }

protected:
    json handle(const std::string& tool, const json& args) override {
        if (tool == "list_boards") {
            return {{"boards", boards_}};
        }
        if (tool == "get_board_items") {
            auto id = args.at("board_id").get<std::string>();
            find_by_id(boards_, id, "board");
            json rows = json::array();
            for (const auto& item : items_) {
                if (item["board_id"] == id) rows.push_back(item);
            }
            return {{"board_id", id}, {"items", rows}};
        }
        if (tool == "get_item") {
            return find_by_id(items_, args.at("item_id").get<std::string>(), "item");
        }
        if (tool == "create_item") {
            auto& board = find_by_id(boards_, args.at("board_id").get<std::string>(), "board");
            auto group = args.value("group_id", board["groups"][0].get<std::string>());
            if (std::find(board["groups"].begin(), board["groups"].end(), group) == board["groups"].end()) {
                throw std::runtime_error("group not found: " + group);
            }
            json item{{"id", next_id("item")}, {"board_id", board["id"]}, {"name", args.at("name")},
                      {"group_id", group}, {"status", "Not started"}, {"updates", json::array()}};
            items_.push_back(item);
            return item;
        }
        if (tool == "update_item_status") {
            auto& item = find_by_id(items_, args.at("item_id").get<std::string>(), "item");
            item["status"] = args.at("status");
            return item;
        }
        if (tool == "create_update") {
            auto& item = find_by_id(items_, args.at("item_id").get<std::string>(), "item");
            json update{{"id", next_id("update")}, {"body", args.at("body")}};
            item["updates"].push_back(update);
            return update;
        }
        if (tool == "move_item_to_group") {
            auto& item = find_by_id(items_, args.at("item_id").get<std::string>(), "item");
            auto& board = find_by_id(boards_, item["board_id"].get<std::string>(), "board");
            auto group = args.at("group_id");
            if (std::find(board["groups"].begin(), board["groups"].end(), group) == board["groups"].end()) {
                throw std::runtime_error("group not found: " + group.get<std::string>());
            }
            item["group_id"] = group;
            return item;
        }
        if (tool == "create_board") {
            json board{{"id", next_id("board")}, {"name", args.at("name")},
                       {"kind", args.value("kind", std::string("public"))},
                       {"groups", json::array({"backlog", "done"})}};
            boards_.push_back(board);
            return board;
        }
        if (tool == "list_users") {
            return {{"users", users_}};
        }
        throw Error(Errc::unknown_tool, "unknown tool: monday/" + tool);
    }

private:
    json boards_;
    json items_;
    json users_;
};

} // namespace

std::unique_ptr<Toolset> make_notion_toolset() { return std::make_unique<NotionToolset>(); }
std::unique_ptr<Toolset> make_monday_toolset() { return std::make_unique<MondayToolset>(); }

} // namespace splitcall::detail

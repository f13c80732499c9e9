#!/usr/bin/env node
import { runScript } from "./cli_util";
import { renderErrorPanels } from "./error_panels";

process.exit(runScript(process.argv.slice(2), "error-panel", renderErrorPanels));

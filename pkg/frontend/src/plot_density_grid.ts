#!/usr/bin/env node
import { runScript } from "./cli_util";
import { renderDensityGrid } from "./density_grid";

process.exit(runScript(process.argv.slice(2), "density-grid", renderDensityGrid));

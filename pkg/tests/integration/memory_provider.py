import json

from dirichletlab import ExperimentLoader, MemoryProvider, full_audit


def memory_provider_example():
    """Example showing an audit driven by a config that never touches the disk"""

    # create memory provider
    memory_provider = MemoryProvider({
        "experiment.json": json.dumps({
            "space": {"weights": [1.0, 2.0, 0.5]},
            "form": {"family": "anisotropic_graph", "edges": "${edges}"},
            "command": {"audit": {"budget": 100}},
            "seed": 11,
        })
    })

    # create loader
    loader = ExperimentLoader(memory_provider, placeholders={"edges": [[0, 1, 1.0, 4.0], [1, 2, 1.0, 4.0]]})

    # run the audit
    config = loader.get_config()
    report = full_audit(config.build_form(), config.command.audit.budget, config.build_space(),
                        config.solver_settings(), seed=config.seed)

    # keep the artifacts next to the config
    memory_provider.upload_file("report.json", report.to_json())
    print(report.to_text())
    print(f"Stored files: {[f['name'] for f in memory_provider.list_files()]}")

if __name__ == "__main__":
    memory_provider_example()

import os

import uvicorn

from .app import DEFAULT_PORT, PORT_ENV, create_app


def main() -> None:
    port = int(os.environ.get(PORT_ENV, DEFAULT_PORT))
    uvicorn.run(create_app(), host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()

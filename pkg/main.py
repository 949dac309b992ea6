import logging

import fastapi
import uvicorn
from fastapi.middleware.cors import CORSMiddleware

from src.routes import analysis, detect

logger = logging.getLogger(__name__)

app = fastapi.FastAPI(title="U-turn analysis")

origins = ["*"]

app.add_middleware(
    CORSMiddleware,
    allow_origins=origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(detect.router, prefix="/api")
app.include_router(analysis.router, prefix="/api")


@app.get("/api/healthchecker")
def healthchecker():
    """
    The healthchecker function tells a caller that the service is up.

    :return: A json object with a message

    """
    return {"message": "U-turn analysis is running"}


if __name__ == "__main__":
    uvicorn.run("main:app", host="127.0.0.1", port=8000, reload=True)
